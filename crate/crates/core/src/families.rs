//! Built-in test-field families. All are defined by seeded coefficients in
//! continuum terms (mode indices and envelopes relative to the box), so the
//! same seed produces the same underlying field at any resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::ops;

const MODE_DECAY: f64 = 1.0;

fn trig_coefficients(rng: &mut ChaCha8Rng, max_mode: i32) -> Vec<([i32; 3], f64, f64)> {
    let mut coeffs = Vec::new();
    for mi in -max_mode..=max_mode {
        for mj in -max_mode..=max_mode {
            for mk in -max_mode..=max_mode {
                if mi == 0 && mj == 0 && mk == 0 {
                    continue;
                }
                let m2 = (mi * mi + mj * mj + mk * mk) as f64;
                let amp = rng.random_range(-1.0..1.0) / m2.powf(MODE_DECAY);
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                coeffs.push(([mi, mj, mk], amp, phase));
            }
        }
    }
    coeffs
}

fn eval_trig(coeffs: &[([i32; 3], f64, f64)], inv_l: f64, p: [f64; 3]) -> f64 {
    let mut acc = 0.0;
    for ([mi, mj, mk], amp, phase) in coeffs {
        let arg = std::f64::consts::PI
            * inv_l
            * (*mi as f64 * p[0] + *mj as f64 * p[1] + *mk as f64 * p[2])
            + phase;
        acc += amp * arg.cos();
    }
    acc
}

/// Smooth periodic random scalar: a seeded trig polynomial with modes up to
/// `max_mode` per axis.
pub fn random_smooth_scalar(grid: Grid, seed: u64, max_mode: i32) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ca1ab1e);
    let coeffs = trig_coefficients(&mut rng, max_mode);
    let inv_l = 1.0 / grid.box_half_width();
    ScalarField::from_fn(grid, move |p| eval_trig(&coeffs, inv_l, p))
}

/// Smooth periodic random vector field (independent trig polynomial per
/// component).
pub fn random_smooth_vector(grid: Grid, seed: u64, max_mode: i32) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbadc0ffe);
    let cs: [Vec<([i32; 3], f64, f64)>; 3] = [
        trig_coefficients(&mut rng, max_mode),
        trig_coefficients(&mut rng, max_mode),
        trig_coefficients(&mut rng, max_mode),
    ];
    let inv_l = 1.0 / grid.box_half_width();
    VectorField::from_fn(grid, move |p| {
        [
            eval_trig(&cs[0], inv_l, p),
            eval_trig(&cs[1], inv_l, p),
            eval_trig(&cs[2], inv_l, p),
        ]
    })
}

/// Divergence-free periodic random field: the curl of a random potential.
pub fn random_divergence_free(grid: Grid, seed: u64, max_mode: i32) -> VectorField {
    let potential = random_smooth_vector(grid, seed, max_mode);
    ops::curl(&potential).expect("curl of a sampled smooth potential")
}

/// Divergence-free random bump: the curl of a Gaussian-enveloped random
/// potential. Decays fast enough that the periodic extension is smooth to
/// machine precision, which makes these the canonical inputs for the
/// conformal identity checks.
pub fn gaussian_bump_divfree(grid: Grid, seed: u64) -> VectorField {
    let l = grid.box_half_width();
    let sigma = l / 3.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0ddba11);
    let cs: [Vec<([i32; 3], f64, f64)>; 3] = [
        trig_coefficients(&mut rng, 2),
        trig_coefficients(&mut rng, 2),
        trig_coefficients(&mut rng, 2),
    ];
    let inv_l = 1.0 / l;
    let potential = VectorField::from_fn(grid, move |p| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        let env = (-r2 / (2.0 * sigma * sigma)).exp();
        [
            env * eval_trig(&cs[0], inv_l, p),
            env * eval_trig(&cs[1], inv_l, p),
            env * eval_trig(&cs[2], inv_l, p),
        ]
    });
    ops::curl(&potential).expect("curl of a sampled bump potential")
}
