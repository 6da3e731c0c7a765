//! Deterministic reductions and small shared helpers.

/// Pairwise summation. Deterministic for a fixed input regardless of thread
/// count (it is serial), and far more accurate than a naive left fold.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        let mut acc = 0.0;
        for x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Conformal measure weight `(2 / (1 + |x|^2))^gamma` sampled on the grid.
///
/// Used to suppress the box-truncation frame when measuring residuals of
/// fields that decay like 1/r^2 on R^3; see the residual operators.
pub fn conformal_weight(grid: crate::grid::Grid, gamma: f64) -> crate::field::ScalarField {
    crate::field::ScalarField::from_fn(grid, |p| {
        let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        (2.0 / (1.0 + r2)).powf(gamma)
    })
}

/// Log-spaced grid of `count` points in `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            (a + t * (b - a)).exp()
        })
        .collect()
}
