//! The "vf3" field container: one JSON header line, then little-endian
//! IEEE-754 float64 samples, row-major with z fastest, components
//! interleaved per site. Spinors store `(re1, im1, re2, im2)`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField, VectorField};
use crate::grid::Grid;

pub const VF3_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKindTag {
    Scalar,
    Vector,
    Spinor,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: FieldKindTag,
    n: usize,
    #[serde(rename = "L")]
    box_half_width: f64,
    version: u32,
}

/// Any of the three field kinds, as read back from a vf3 file.
#[derive(Debug, Clone)]
pub enum AnyField {
    Scalar(ScalarField),
    Vector(VectorField),
    Spinor(SpinorField),
}

impl AnyField {
    pub fn grid(&self) -> Grid {
        match self {
            AnyField::Scalar(f) => f.grid(),
            AnyField::Vector(f) => f.grid(),
            AnyField::Spinor(f) => f.grid(),
        }
    }

    pub fn kind(&self) -> FieldKindTag {
        match self {
            AnyField::Scalar(_) => FieldKindTag::Scalar,
            AnyField::Vector(_) => FieldKindTag::Vector,
            AnyField::Spinor(_) => FieldKindTag::Spinor,
        }
    }
}

fn doubles_per_site(kind: FieldKindTag) -> usize {
    match kind {
        FieldKindTag::Scalar => 1,
        FieldKindTag::Vector => 3,
        FieldKindTag::Spinor => 4,
    }
}

fn write_header<W: Write>(w: &mut W, kind: FieldKindTag, grid: Grid) -> Result<u64> {
    let header = Header {
        kind,
        n: grid.n(),
        box_half_width: grid.box_half_width(),
        version: VF3_VERSION,
    };
    let mut line = serde_json::to_string(&header)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    Ok(line.len() as u64)
}

fn write_samples<W: Write>(w: &mut W, samples: impl Iterator<Item = f64>) -> Result<()> {
    let mut buf = Vec::with_capacity(1 << 16);
    for s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
        if buf.len() >= (1 << 16) {
            w.write_all(&buf)?;
            buf.clear();
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_vf3(path: &Path, field: &AnyField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match field {
        AnyField::Scalar(f) => {
            write_header(&mut w, FieldKindTag::Scalar, f.grid())?;
            write_samples(&mut w, f.values().iter().copied())?;
        }
        AnyField::Vector(f) => {
            write_header(&mut w, FieldKindTag::Vector, f.grid())?;
            write_samples(&mut w, f.values().iter().copied())?;
        }
        AnyField::Spinor(f) => {
            write_header(&mut w, FieldKindTag::Spinor, f.grid())?;
            write_samples(
                &mut w,
                f.values().iter().flat_map(|c| [c.re, c.im]),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_vf3(path: &Path) -> Result<AnyField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;

    let newline = raw.iter().position(|&b| b == b'\n').ok_or(Error::Vf3 {
        offset: raw.len() as u64,
        message: "missing header newline".into(),
    })?;
    let header: Header = serde_json::from_slice(&raw[..newline]).map_err(|e| Error::Vf3 {
        offset: e.column().saturating_sub(1) as u64,
        message: format!("bad header: {e}"),
    })?;
    if header.version != VF3_VERSION {
        return Err(Error::Vf3 {
            offset: 0,
            message: format!("unsupported version {}", header.version),
        });
    }
    let grid = Grid::new(header.n, header.box_half_width).map_err(|e| Error::Vf3 {
        offset: 0,
        message: e.to_string(),
    })?;

    let payload_start = newline as u64 + 1;
    let payload = &raw[newline + 1..];
    let expected = grid.sites() * doubles_per_site(header.kind);
    if payload.len() != 8 * expected {
        let bad = payload.len().min(8 * expected);
        return Err(Error::Vf3 {
            offset: payload_start + bad as u64,
            message: format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                8 * expected
            ),
        });
    }

    let mut samples = Vec::with_capacity(expected);
    for (idx, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Vf3 {
                offset: payload_start + 8 * idx as u64,
                message: format!("non-finite sample {v}"),
            });
        }
        samples.push(v);
    }

    let to_vf3_err = |e: Error| match e {
        Error::Vf3 { offset, message } => Error::Vf3 { offset, message },
        other => Error::Vf3 { offset: payload_start, message: other.to_string() },
    };
    match header.kind {
        FieldKindTag::Scalar => Ok(AnyField::Scalar(
            ScalarField::from_values(grid, samples).map_err(to_vf3_err)?,
        )),
        FieldKindTag::Vector => Ok(AnyField::Vector(
            VectorField::from_values(grid, samples).map_err(to_vf3_err)?,
        )),
        FieldKindTag::Spinor => {
            let complex: Vec<Complex64> = samples
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect();
            Ok(AnyField::Spinor(
                SpinorField::from_values(grid, complex).map_err(to_vf3_err)?,
            ))
        }
    }
}
