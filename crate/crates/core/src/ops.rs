//! Spectral differential and integral operators on periodic fields.
//!
//! First-order operators (curl, divergence, gradient) multiply by the
//! derivative wavenumbers with the unpaired Nyquist mode zeroed, so the
//! algebraic identities `curl . grad = 0` and `div . curl = 0` hold to
//! rounding on arbitrary data. The inverse Laplacian and Biot-Savart kernels
//! use the same wavenumber set with the null modes dropped (mean-free
//! convention); the heat semigroup uses the full `|k|^2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{FieldKind, ScalarField, SpinorField, VectorField};
use crate::grid::Grid;
use crate::util::pairwise_sum;

fn sup_magnitude<F: FieldKind + Sync>(f: &F) -> f64 {
    (0..f.grid().sites())
        .into_par_iter()
        .map(|s| f.magnitude_at(s))
        .reduce(|| 0.0, f64::max)
}

#[inline]
fn mode_indices(n: usize, flat: usize) -> (usize, usize, usize) {
    let k = flat % n;
    let j = (flat / n) % n;
    let i = flat / (n * n);
    (i, j, k)
}

/// Curl via `i k x V` in frequency space.
pub fn curl(v: &VectorField) -> Result<VectorField> {
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let [fx, fy, fz] = fft::forward_vector(v);
    let n3 = grid.sites();
    let mut cx = vec![Complex64::ZERO; n3];
    let mut cy = vec![Complex64::ZERO; n3];
    let mut cz = vec![Complex64::ZERO; n3];
    cx.par_iter_mut()
        .zip(cy.par_iter_mut())
        .zip(cz.par_iter_mut())
        .enumerate()
        .for_each(|(s, ((ox, oy), oz))| {
            let (i, j, k) = mode_indices(n, s);
            let (kx, ky, kz) = (kv[i], kv[j], kv[k]);
            let im = Complex64::new(0.0, 1.0);
            *ox = im * (ky * fz[s] - kz * fy[s]);
            *oy = im * (kz * fx[s] - kx * fz[s]);
            *oz = im * (kx * fy[s] - ky * fx[s]);
        });
    fft::inverse_to_vector(grid, [cx, cy, cz], scale)
}

/// Divergence via `i k . V` in frequency space.
pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let [fx, fy, fz] = fft::forward_vector(v);
    let mut out = vec![Complex64::ZERO; grid.sites()];
    out.par_iter_mut().enumerate().for_each(|(s, o)| {
        let (i, j, k) = mode_indices(n, s);
        *o = Complex64::new(0.0, 1.0) * (kv[i] * fx[s] + kv[j] * fy[s] + kv[k] * fz[s]);
    });
    fft::inverse_to_scalar(grid, out, scale)
}

/// Gradient via `i k f` in frequency space.
pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    let scale = sup_magnitude(f);
    let grid = f.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let spec = fft::forward_scalar(f);
    let n3 = grid.sites();
    let mut gx = vec![Complex64::ZERO; n3];
    let mut gy = vec![Complex64::ZERO; n3];
    let mut gz = vec![Complex64::ZERO; n3];
    gx.par_iter_mut()
        .zip(gy.par_iter_mut())
        .zip(gz.par_iter_mut())
        .enumerate()
        .for_each(|(s, ((ox, oy), oz))| {
            let (i, j, k) = mode_indices(n, s);
            let im = Complex64::new(0.0, 1.0);
            *ox = im * kv[i] * spec[s];
            *oy = im * kv[j] * spec[s];
            *oz = im * kv[k] * spec[s];
        });
    fft::inverse_to_vector(grid, [gx, gy, gz], scale)
}

fn apply_inverse_k2(grid: Grid, spec: &mut [Complex64]) {
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    spec.par_iter_mut().enumerate().for_each(|(s, v)| {
        let (i, j, k) = mode_indices(n, s);
        let k2 = kv[i] * kv[i] + kv[j] * kv[j] + kv[k] * kv[k];
        *v = if k2 > 0.0 { *v / k2 } else { Complex64::ZERO };
    });
}

/// Inverse Laplacian `(-Delta)^{-1}` with the null modes set to zero.
/// A nonzero input mean is removed silently and logged.
pub fn inverse_laplacian(f: &ScalarField) -> Result<ScalarField> {
    let mean = f.mean();
    if mean.abs() > 1e-12 * f.values().iter().fold(0.0f64, |a, v| a.max(v.abs())) {
        log::debug!("inverse_laplacian: removing input mean {mean:.3e}");
    }
    let scale = sup_magnitude(f);
    let mut spec = fft::forward_scalar(f);
    apply_inverse_k2(f.grid(), &mut spec);
    fft::inverse_to_scalar(f.grid(), spec, scale)
}

/// Componentwise inverse Laplacian on a vector field, null modes dropped.
pub fn inverse_laplacian_vec(v: &VectorField) -> Result<VectorField> {
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let mut comps = fft::forward_vector(v);
    for comp in comps.iter_mut() {
        apply_inverse_k2(grid, comp);
    }
    fft::inverse_to_vector(grid, comps, scale)
}

/// Componentwise `(-Delta)^{-1/2}`, null modes dropped. The negative-order
/// metric used by the Euler-Lagrange residual.
pub fn inverse_sqrt_laplacian_vec(v: &VectorField) -> Result<VectorField> {
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let mut comps = fft::forward_vector(v);
    for comp in comps.iter_mut() {
        comp.par_iter_mut().enumerate().for_each(|(s, val)| {
            let (i, j, k) = mode_indices(n, s);
            let k2 = kv[i] * kv[i] + kv[j] * kv[j] + kv[k] * kv[k];
            *val = if k2 > 0.0 { *val / k2.sqrt() } else { Complex64::ZERO };
        });
    }
    fft::inverse_to_vector(grid, comps, scale)
}

fn heat_multiplier(grid: Grid, t: f64, spec: &mut [Complex64]) {
    let n = grid.n();
    let kv = fft::wavenumbers_full(grid);
    spec.par_iter_mut().enumerate().for_each(|(s, v)| {
        let (i, j, k) = mode_indices(n, s);
        let k2 = kv[i] * kv[i] + kv[j] * kv[j] + kv[k] * kv[k];
        *v *= (-t * k2).exp();
    });
}

/// Heat semigroup `e^{t Delta}` on a scalar field.
pub fn heat(f: &ScalarField, t: f64) -> Result<ScalarField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("heat time must be >= 0, got {t}")));
    }
    let scale = sup_magnitude(f);
    let mut spec = fft::forward_scalar(f);
    heat_multiplier(f.grid(), t, &mut spec);
    fft::inverse_to_scalar(f.grid(), spec, scale)
}

/// Heat semigroup on a vector field, componentwise.
pub fn heat_vec(v: &VectorField, t: f64) -> Result<VectorField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("heat time must be >= 0, got {t}")));
    }
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let mut comps = fft::forward_vector(v);
    for comp in comps.iter_mut() {
        heat_multiplier(grid, t, comp);
    }
    fft::inverse_to_vector(grid, comps, scale)
}

/// Heat semigroup on a spinor field, componentwise.
pub fn heat_spinor(f: &SpinorField, t: f64) -> Result<SpinorField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("heat time must be >= 0, got {t}")));
    }
    let grid = f.grid();
    let mut comps = fft::forward_spinor(f);
    for comp in comps.iter_mut() {
        heat_multiplier(grid, t, comp);
    }
    fft::inverse_to_spinor(grid, comps)
}

/// Vector potential of a magnetic field: `A_hat = i k x B_hat / |k|^2`,
/// null modes dropped. Divergence-free by construction; inverts the curl on
/// divergence-free mean-free data.
pub fn biot_savart(b: &VectorField) -> Result<VectorField> {
    let scale = sup_magnitude(b);
    let grid = b.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let [fx, fy, fz] = fft::forward_vector(b);
    let n3 = grid.sites();
    let mut ax = vec![Complex64::ZERO; n3];
    let mut ay = vec![Complex64::ZERO; n3];
    let mut az = vec![Complex64::ZERO; n3];
    ax.par_iter_mut()
        .zip(ay.par_iter_mut())
        .zip(az.par_iter_mut())
        .enumerate()
        .for_each(|(s, ((ox, oy), oz))| {
            let (i, j, k) = mode_indices(n, s);
            let (kx, ky, kz) = (kv[i], kv[j], kv[k]);
            let k2 = kx * kx + ky * ky + kz * kz;
            if k2 > 0.0 {
                let im = Complex64::new(0.0, 1.0 / k2);
                *ox = im * (ky * fz[s] - kz * fy[s]);
                *oy = im * (kz * fx[s] - kx * fz[s]);
                *oz = im * (kx * fy[s] - ky * fx[s]);
            }
        });
    fft::inverse_to_vector(grid, [ax, ay, az], scale)
}

/// Gradient part of the Helmholtz decomposition, `grad (-Delta)^{-1} div V`,
/// done in one spectral pass.
pub(crate) fn gradient_part(v: &VectorField) -> Result<VectorField> {
    let scale = sup_magnitude(v);
    let grid = v.grid();
    let n = grid.n();
    let kv = fft::wavenumbers_deriv(grid);
    let [fx, fy, fz] = fft::forward_vector(v);
    let n3 = grid.sites();
    let mut gx = vec![Complex64::ZERO; n3];
    let mut gy = vec![Complex64::ZERO; n3];
    let mut gz = vec![Complex64::ZERO; n3];
    gx.par_iter_mut()
        .zip(gy.par_iter_mut())
        .zip(gz.par_iter_mut())
        .enumerate()
        .for_each(|(s, ((ox, oy), oz))| {
            let (i, j, k) = mode_indices(n, s);
            let (kx, ky, kz) = (kv[i], kv[j], kv[k]);
            let k2 = kx * kx + ky * ky + kz * kz;
            if k2 > 0.0 {
                let proj = (kx * fx[s] + ky * fy[s] + kz * fz[s]) / k2;
                *ox = kx * proj;
                *oy = ky * proj;
                *oz = kz * proj;
            }
        });
    fft::inverse_to_vector(grid, [gx, gy, gz], scale)
}

/// `L^p` norm with the `h^3` Riemann weight; `p = infinity` gives the max of
/// the pointwise Euclidean magnitude.
pub fn lp_norm<F: FieldKind + Sync>(f: &F, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("lp_norm requires p >= 1, got {p}")));
    }
    let grid = f.grid();
    let n3 = grid.sites();
    if p.is_infinite() {
        let m = (0..n3)
            .into_par_iter()
            .map(|s| f.magnitude_at(s))
            .reduce(|| 0.0, f64::max);
        return Ok(m);
    }
    let partial: Vec<f64> = (0..n3)
        .into_par_iter()
        .chunks(8192)
        .map(|chunk| {
            let terms: Vec<f64> = chunk.iter().map(|&s| f.magnitude_at(s).powf(p)).collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok((pairwise_sum(&partial) * grid.cell_volume()).powf(1.0 / p))
}

/// `L^p` norm against a positive measure weight (`weight * h^3` per site).
pub fn weighted_lp_norm<F: FieldKind + Sync>(f: &F, weight: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "weighted_lp_norm requires finite p >= 1, got {p}"
        )));
    }
    if f.grid() != weight.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = f.grid();
    let w = weight.values();
    let partial: Vec<f64> = (0..grid.sites())
        .into_par_iter()
        .chunks(8192)
        .map(|chunk| {
            let terms: Vec<f64> =
                chunk.iter().map(|&s| w[s] * f.magnitude_at(s).powf(p)).collect();
            pairwise_sum(&terms)
        })
        .collect();
    Ok((pairwise_sum(&partial) * grid.cell_volume()).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn white_noise_vector(grid: Grid, seed: u64) -> VectorField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> =
            (0..3 * grid.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        VectorField::from_values(grid, values).unwrap()
    }

    fn white_noise_scalar(grid: Grid, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..grid.sites()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ScalarField::from_values(grid, values).unwrap()
    }

    fn smooth_scalar(grid: Grid) -> ScalarField {
        let l = grid.box_half_width();
        let w = std::f64::consts::PI / l;
        ScalarField::from_fn(grid, |p| {
            (w * p[0]).sin() * (2.0 * w * p[1]).cos() + 0.5 * (w * (p[2] - p[0])).cos()
        })
    }

    #[test]
    fn curl_of_constant_is_zero() {
        let grid = Grid::new(16, 4.0).unwrap();
        let v = VectorField::from_fn(grid, |_| [1.0, 2.0, 3.0]);
        let c = curl(&v).unwrap();
        assert!(lp_norm(&c, f64::INFINITY).unwrap() < 1e-13);
    }

    #[test]
    fn curl_of_gradient_is_zero() {
        let grid = Grid::new(16, 4.0).unwrap();
        // white noise: the identity is algebraic in frequency space
        let f = white_noise_scalar(grid, 1);
        let g = gradient(&f).unwrap();
        let c = curl(&g).unwrap();
        let rel = lp_norm(&c, 2.0).unwrap() / lp_norm(&g, 2.0).unwrap();
        assert!(rel < 1e-12, "rel = {rel:e}");
    }

    #[test]
    fn divergence_of_curl_is_zero() {
        let grid = Grid::new(16, 4.0).unwrap();
        let v = white_noise_vector(grid, 2);
        let c = curl(&v).unwrap();
        let d = divergence(&c).unwrap();
        let rel = lp_norm(&d, 2.0).unwrap() / lp_norm(&c, 2.0).unwrap();
        assert!(rel < 1e-12, "rel = {rel:e}");
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = ScalarField::from_fn(grid, |_| 4.2);
        let g = gradient(&f).unwrap();
        assert!(lp_norm(&g, f64::INFINITY).unwrap() < 1e-13);
    }

    #[test]
    fn inverse_laplacian_eigenfunction() {
        let grid = Grid::new(32, 4.0).unwrap();
        let l = grid.box_half_width();
        let w = std::f64::consts::PI / l;
        let f = ScalarField::from_fn(grid, |p| (w * p[0]).cos());
        let u = inverse_laplacian(&f).unwrap();
        let scale = (l / std::f64::consts::PI).powi(2);
        for (a, b) in u.values().iter().zip(f.values()) {
            assert!((a - scale * b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_laplacian_of_constant_is_zero() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = ScalarField::from_fn(grid, |_| 7.0);
        let u = inverse_laplacian(&f).unwrap();
        assert!(lp_norm(&u, f64::INFINITY).unwrap() < 1e-13);
    }

    #[test]
    fn inverse_laplacian_round_trip() {
        // -Delta (inverse_laplacian f) = f - mean f, with -Delta = div grad,
        // on band-limited data
        let grid = Grid::new(16, 4.0).unwrap();
        let f = smooth_scalar(grid);
        let u = inverse_laplacian(&f).unwrap();
        let lap = divergence(&gradient(&u).unwrap()).unwrap();
        let mean = f.mean();
        let mut err: f64 = 0.0;
        for (a, b) in lap.values().iter().zip(f.values()) {
            err = err.max((-a - (b - mean)).abs());
        }
        assert!(err < 1e-11, "err = {err:e}");
    }

    #[test]
    fn heat_at_zero_is_identity() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = white_noise_scalar(grid, 3);
        let g = heat(&f, 0.0).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_preserves_constants() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = ScalarField::from_fn(grid, |_| 2.5);
        let g = heat(&f, 3.7).unwrap();
        for v in g.values() {
            assert!((v - 2.5).abs() < 1e-13);
        }
    }

    #[test]
    fn heat_semigroup_property() {
        let grid = Grid::new(16, 4.0).unwrap();
        let f = white_noise_scalar(grid, 4);
        let a = heat(&heat(&f, 0.3).unwrap(), 0.2).unwrap();
        let b = heat(&f, 0.5).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_rejects_negative_time() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = ScalarField::zeros(grid);
        assert!(heat(&f, -1.0).is_err());
    }

    #[test]
    fn heat_is_lp_contraction() {
        let grid = Grid::new(16, 4.0).unwrap();
        let v = white_noise_vector(grid, 5);
        for p in [1.5, 2.0, 3.0] {
            let before = lp_norm(&v, p).unwrap();
            for t in [1e-3, 0.1, 1.0] {
                let after = lp_norm(&heat_vec(&v, t).unwrap(), p).unwrap();
                assert!(
                    after <= before * (1.0 + 1e-10),
                    "p={p} t={t}: {after} > {before}"
                );
            }
        }
    }

    #[test]
    fn biot_savart_is_divergence_free() {
        let grid = Grid::new(16, 4.0).unwrap();
        let b = white_noise_vector(grid, 6);
        let a = biot_savart(&b).unwrap();
        let d = divergence(&a).unwrap();
        let rel = lp_norm(&d, 2.0).unwrap() / lp_norm(&a, 2.0).unwrap();
        assert!(rel < 1e-12, "rel = {rel:e}");
    }

    #[test]
    fn biot_savart_inverts_curl() {
        let grid = Grid::new(16, 4.0).unwrap();
        // divergence-free mean-free data: a curl of anything
        let b = curl(&white_noise_vector(grid, 7)).unwrap();
        let a = biot_savart(&b).unwrap();
        let c = curl(&a).unwrap();
        let mut err: f64 = 0.0;
        for (x, y) in c.values().iter().zip(b.values()) {
            err = err.max((x - y).abs());
        }
        let scale = lp_norm(&b, f64::INFINITY).unwrap();
        assert!(err < 1e-12 * scale, "err = {err:e}");
    }

    #[test]
    fn biot_savart_of_zero_is_zero() {
        let grid = Grid::new(8, 2.0).unwrap();
        let a = biot_savart(&VectorField::zeros(grid)).unwrap();
        assert_eq!(lp_norm(&a, f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_of_constant() {
        // constant c at p=3 integrates to |c| * 2L
        let grid = Grid::new(8, 4.0).unwrap();
        let f = ScalarField::from_fn(grid, |_| -1.5);
        let got = lp_norm(&f, 3.0).unwrap();
        assert!((got - 1.5 * 8.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_rejects_bad_exponent() {
        let grid = Grid::new(8, 2.0).unwrap();
        let f = ScalarField::zeros(grid);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn fd4_oracle_matches_spectral_curl_and_divergence() {
        // 4th-order periodic central differences as an independent stencil
        // oracle, on a smooth compactly-supported bump; interior error only,
        // and it shrinks by ~2^4 when n doubles at fixed L.
        fn fd4_curl_err(n: usize) -> f64 {
            let grid = Grid::new(n, 6.0).unwrap();
            let v = VectorField::from_fn(grid, |p| {
                let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
                let e = (-r2).exp();
                [e * p[1], -e * p[0], e * p[2] * 0.5]
            });
            let c = curl(&v).unwrap();
            let h = grid.spacing();
            let nn = grid.n();
            let idx = |i: usize, j: usize, k: usize| grid.site(i % nn, j % nn, k % nn);
            let mut err: f64 = 0.0;
            let vals = v.values();
            // 4th-order difference along one axis of one component
            let diff = |comp: usize, i: usize, j: usize, k: usize, axis: usize| -> f64 {
                let at = |di: isize| -> f64 {
                    let (mut a, mut b, mut c3) = (i as isize, j as isize, k as isize);
                    match axis {
                        0 => a += di,
                        1 => b += di,
                        _ => c3 += di,
                    }
                    let m = nn as isize;
                    vals[3 * idx(
                        ((a + m) % m) as usize,
                        ((b + m) % m) as usize,
                        ((c3 + m) % m) as usize,
                    ) + comp]
                };
                (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
            };
            for i in nn / 4..3 * nn / 4 {
                for j in nn / 4..3 * nn / 4 {
                    for k in nn / 4..3 * nn / 4 {
                        let cx = diff(2, i, j, k, 1) - diff(1, i, j, k, 2);
                        let s = grid.site(i, j, k);
                        err = err.max((cx - c.values()[3 * s]).abs());
                    }
                }
            }
            err
        }
        let e32 = fd4_curl_err(32);
        let e64 = fd4_curl_err(64);
        assert!(e64 < 1e-3, "absolute interior error too large: {e64:e}");
        assert!(e32 / e64 > 8.0, "no 4th-order convergence: {e32:e} vs {e64:e}");
    }
}

/// Test-support: raw forward spectrum of a scalar field.
#[doc(hidden)]
pub fn debug_forward(f: &ScalarField) -> Vec<Complex64> {
    crate::fft::forward_scalar(f)
}
