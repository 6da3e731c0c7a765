//! 3D FFT plumbing shared by the spectral operators.
//!
//! Transforms are unnormalized forward and `1/n^3`-normalized inverse. Each
//! axis pass runs on contiguous lines (the cube is rotated between passes),
//! with lines dispatched in parallel; all writes are disjoint so results are
//! bitwise deterministic for any thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{ScalarField, SpinorField, VectorField};
use crate::grid::Grid;

static PLANS: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

fn fft_lines(data: &mut [Complex64], n: usize, forward: bool) {
    let p = plan(n, forward);
    let scratch_len = p.get_inplace_scratch_len();
    data.par_chunks_mut(n).for_each_init(
        || vec![Complex64::ZERO; scratch_len],
        |scratch, line| p.process_with_scratch(line, scratch),
    );
}

/// Rotate axes `[a][b][c] -> [c][a][b]` (a 2D transpose of shape `(n^2, n)`).
fn rotate(data: &[Complex64], out: &mut [Complex64], n: usize) {
    transpose::transpose(data, out, n, n * n);
}

/// In-place 3D transform over the cube; `data` is row-major `[i][j][k]`.
pub(crate) fn fft3(data: &mut Vec<Complex64>, n: usize, forward: bool) {
    debug_assert_eq!(data.len(), n * n * n);
    let mut scratch = vec![Complex64::ZERO; data.len()];
    // k-lines are contiguous in the [i][j][k] layout
    fft_lines(data, n, forward);
    rotate(data, &mut scratch, n); // -> [k][i][j]
    fft_lines(&mut scratch, n, forward);
    rotate(&scratch, data, n); // -> [j][k][i]
    fft_lines(data, n, forward);
    // final rotation restores [i][j][k]
    rotate(data, &mut scratch, n);
    data.copy_from_slice(&scratch);
    if !forward {
        let norm = 1.0 / (n * n * n) as f64;
        data.par_iter_mut().for_each(|v| *v *= norm);
    }
}

/// Derivative wavenumbers per axis index: `m * pi / L` for the symmetric
/// modes, with the unpaired Nyquist mode `m = -n/2` zeroed so first-order
/// operators map real fields to real fields exactly.
pub(crate) fn wavenumbers_deriv(grid: Grid) -> Vec<f64> {
    let n = grid.n();
    let base = std::f64::consts::PI / grid.box_half_width();
    (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as isize } else { i as isize - n as isize };
            if m == -(n as isize) / 2 {
                0.0
            } else {
                m as f64 * base
            }
        })
        .collect()
}

/// Full wavenumbers including the Nyquist magnitude; used in even
/// multipliers such as the heat kernel where symmetry is automatic.
pub(crate) fn wavenumbers_full(grid: Grid) -> Vec<f64> {
    let n = grid.n();
    let base = std::f64::consts::PI / grid.box_half_width();
    (0..n)
        .map(|i| {
            let m = if i < n / 2 { i as isize } else { i as isize - n as isize };
            m as f64 * base
        })
        .collect()
}

pub(crate) fn forward_scalar(f: &ScalarField) -> Vec<Complex64> {
    let mut data: Vec<Complex64> =
        f.values().par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft3(&mut data, f.grid().n(), true);
    data
}

const REAL_RESIDUE_TOL: f64 = 1e-10;

/// Drop the imaginary residue of an inverse transform. `scale` is the sup
/// magnitude of the operator's input; a residue is only an error when it is
/// large against both the produced field and that input scale (results that
/// are legitimately zero are all rounding noise).
fn take_real(data: &[Complex64], scale: f64) -> Result<Vec<f64>> {
    let (mut re_max, mut im_max) = (0.0f64, 0.0f64);
    for v in data {
        re_max = re_max.max(v.re.abs());
        im_max = im_max.max(v.im.abs());
    }
    if im_max > REAL_RESIDUE_TOL * (re_max + scale) + 1e-280 {
        return Err(Error::ComplexResidue(im_max / re_max.max(f64::MIN_POSITIVE)));
    }
    Ok(data.par_iter().map(|v| v.re).collect())
}

pub(crate) fn inverse_to_scalar(
    grid: Grid,
    mut data: Vec<Complex64>,
    scale: f64,
) -> Result<ScalarField> {
    fft3(&mut data, grid.n(), false);
    ScalarField::from_values(grid, take_real(&data, scale)?)
}

pub(crate) fn forward_vector(f: &VectorField) -> [Vec<Complex64>; 3] {
    let n3 = f.grid().sites();
    let mut comps = [
        vec![Complex64::ZERO; n3],
        vec![Complex64::ZERO; n3],
        vec![Complex64::ZERO; n3],
    ];
    for (c, comp) in comps.iter_mut().enumerate() {
        comp.par_iter_mut()
            .zip(f.values().par_chunks(3))
            .for_each(|(out, v)| *out = Complex64::new(v[c], 0.0));
        fft3(comp, f.grid().n(), true);
    }
    comps
}

pub(crate) fn inverse_to_vector(
    grid: Grid,
    mut comps: [Vec<Complex64>; 3],
    scale: f64,
) -> Result<VectorField> {
    let mut values = vec![0.0; 3 * grid.sites()];
    for (c, comp) in comps.iter_mut().enumerate() {
        fft3(comp, grid.n(), false);
        let re = take_real(comp, scale)?;
        values
            .par_chunks_mut(3)
            .zip(re.par_iter())
            .for_each(|(site, &v)| site[c] = v);
    }
    VectorField::from_values(grid, values)
}

pub(crate) fn forward_spinor(f: &SpinorField) -> [Vec<Complex64>; 2] {
    let n3 = f.grid().sites();
    let mut comps = [vec![Complex64::ZERO; n3], vec![Complex64::ZERO; n3]];
    for (c, comp) in comps.iter_mut().enumerate() {
        comp.par_iter_mut()
            .zip(f.values().par_chunks(2))
            .for_each(|(out, v)| *out = v[c]);
        fft3(comp, f.grid().n(), true);
    }
    comps
}

pub(crate) fn inverse_to_spinor(grid: Grid, mut comps: [Vec<Complex64>; 2]) -> Result<SpinorField> {
    let mut values = vec![Complex64::ZERO; 2 * grid.sites()];
    for (c, comp) in comps.iter_mut().enumerate() {
        fft3(comp, grid.n(), false);
        values
            .par_chunks_mut(2)
            .zip(comp.par_iter())
            .for_each(|(site, &v)| site[c] = v);
    }
    SpinorField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_inverse_roundtrip() {
        let grid = Grid::new(8, 4.0).unwrap();
        let f = ScalarField::from_fn(grid, |p| (p[0] * 0.7).sin() + 0.3 * (p[1] - p[2]).cos());
        let spec = forward_scalar(&f);
        let back = inverse_to_scalar(grid, spec, 1.0).unwrap();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parseval_consistency() {
        let grid = Grid::new(16, 2.0).unwrap();
        let f = ScalarField::from_fn(grid, |p| {
            (1.3 * p[0]).sin() * (0.9 * p[1]).cos() + 0.1 * p[2]
        });
        let spec = forward_scalar(&f);
        let sum_x: f64 = f.values().iter().map(|v| v * v).sum();
        let sum_k: f64 =
            spec.iter().map(|v| v.norm_sqr()).sum::<f64>() / grid.sites() as f64;
        assert!((sum_x - sum_k).abs() <= 1e-12 * sum_x);
    }
}
