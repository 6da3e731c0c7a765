use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Real scalar samples on a [`Grid`], row-major, z fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

/// Real 3-vector samples; components interleaved per site `[vx, vy, vz]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<f64>,
}

/// Complex 2-spinor samples; components interleaved per site.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.sites()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(Error::InvalidArgument(format!(
                "scalar field needs {} samples, got {}",
                grid.sites(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(ScalarField { grid, values })
    }

    /// Sample a function of position on every site.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let mut values = vec![0.0; grid.sites()];
        values.par_iter_mut().enumerate().for_each(|(s, v)| {
            *v = f(grid.position(s));
        });
        ScalarField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mean(&self) -> f64 {
        crate::util::pairwise_sum(&self.values) / self.grid.sites() as f64
    }
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, values: vec![0.0; 3 * grid.sites()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != 3 * grid.sites() {
            return Err(Error::InvalidArgument(format!(
                "vector field needs {} samples, got {}",
                3 * grid.sites(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(VectorField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Self {
        let mut values = vec![0.0; 3 * grid.sites()];
        values.par_chunks_mut(3).enumerate().for_each(|(s, v)| {
            let out = f(grid.position(s));
            v.copy_from_slice(&out);
        });
        VectorField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, site: usize) -> [f64; 3] {
        let b = 3 * site;
        [self.values[b], self.values[b + 1], self.values[b + 2]]
    }

    /// Pointwise Euclidean magnitude as a scalar field.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        out.values_mut()
            .par_iter_mut()
            .zip(self.values.par_chunks(3))
            .for_each(|(m, v)| *m = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt());
        out
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &VectorField) -> Result<VectorField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(a, b)| *a += c * b);
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> VectorField {
        let mut out = self.clone();
        out.values.par_iter_mut().for_each(|v| *v *= c);
        out
    }

    /// L2-style dot product with the `h^3` quadrature weight.
    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let prods: Vec<f64> = self
            .values
            .par_chunks(4096)
            .zip(other.values.par_chunks(4096))
            .map(|(a, b)| {
                let mut acc = 0.0;
                for (x, y) in a.iter().zip(b) {
                    acc += x * y;
                }
                acc
            })
            .collect();
        Ok(crate::util::pairwise_sum(&prods) * self.grid.cell_volume())
    }
}

impl SpinorField {
    pub fn zeros(grid: Grid) -> Self {
        SpinorField { grid, values: vec![Complex64::ZERO; 2 * grid.sites()] }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * grid.sites() {
            return Err(Error::InvalidArgument(format!(
                "spinor field needs {} samples, got {}",
                2 * grid.sites(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        Ok(SpinorField { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [Complex64; 2] + Sync) -> Self {
        let mut values = vec![Complex64::ZERO; 2 * grid.sites()];
        values.par_chunks_mut(2).enumerate().for_each(|(s, v)| {
            let out = f(grid.position(s));
            v.copy_from_slice(&out);
        });
        SpinorField { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, site: usize) -> [Complex64; 2] {
        [self.values[2 * site], self.values[2 * site + 1]]
    }

    pub fn sub(&self, other: &SpinorField) -> Result<SpinorField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut out = self.clone();
        out.values
            .par_iter_mut()
            .zip(other.values.par_iter())
            .for_each(|(a, b)| *a -= b);
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.norm_sqr() == 0.0)
    }
}

/// Common view of the three field kinds used by the norm machinery.
pub trait FieldKind {
    fn grid(&self) -> Grid;
    /// Pointwise magnitude at a flat site index.
    fn magnitude_at(&self, site: usize) -> f64;
}

impl FieldKind for ScalarField {
    fn grid(&self) -> Grid {
        self.grid
    }
    #[inline]
    fn magnitude_at(&self, site: usize) -> f64 {
        self.values[site].abs()
    }
}

impl FieldKind for VectorField {
    fn grid(&self) -> Grid {
        self.grid
    }
    #[inline]
    fn magnitude_at(&self, site: usize) -> f64 {
        let b = 3 * site;
        let v = &self.values[b..b + 3];
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }
}

impl FieldKind for SpinorField {
    fn grid(&self) -> Grid {
        self.grid
    }
    #[inline]
    fn magnitude_at(&self, site: usize) -> f64 {
        let b = 2 * site;
        (self.values[b].norm_sqr() + self.values[b + 1].norm_sqr()).sqrt()
    }
}
