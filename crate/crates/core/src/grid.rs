use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic cubic lattice on `[-L, L)^3` with `n` sites per axis.
///
/// Sites are `x_i = -L + i * h` with `h = 2L/n`; samples are stored row-major
/// with the z index fastest. The discrete Fourier frequencies per axis are
/// `{-n/2, ..., n/2 - 1} * (pi / L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_half_width: f64,
}

impl Grid {
    pub fn new(n: usize, box_half_width: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("n must be even >= 8, got {n}")));
        }
        if !(box_half_width > 0.0) || !box_half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box half-width must be positive and finite, got {box_half_width}"
            )));
        }
        Ok(Grid { n, box_half_width })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_half_width(&self) -> f64 {
        self.box_half_width
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.box_half_width / self.n as f64
    }

    /// Number of lattice sites, `n^3`.
    #[inline]
    pub fn sites(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Cell volume `h^3`, the Riemann quadrature weight.
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    /// Coordinate of site index `i` along one axis.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.box_half_width + i as f64 * self.spacing()
    }

    /// Flat site index for `(i, j, k)`, z fastest.
    #[inline]
    pub fn site(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Position of a flat site index.
    #[inline]
    pub fn position(&self, site: usize) -> [f64; 3] {
        let n = self.n;
        let k = site % n;
        let j = (site / n) % n;
        let i = site / (n * n);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Whether a point lies inside the box `[-L, L)^3`.
    #[inline]
    pub fn contains(&self, p: [f64; 3]) -> bool {
        let l = self.box_half_width;
        p.iter().all(|&c| c >= -l && c < l)
    }
}
