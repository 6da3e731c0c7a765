use std::time::Instant;
use curlsob::closed_forms::loss_yau_field;
use curlsob::conformal::{conformal_energy_check, conformal_seminorm_check, weighted_norm_check};
use curlsob::families;
use curlsob::gauge::{gauge_fix, gauge_stability, mollify_defect, GaugeOptions};
use curlsob::variational::{minimize, quotient, MinimizeOptions, DEFAULT_EPS_REG};
use curlsob::Grid;

fn main() {
    let w = [0.0, 0.0, 1.0];

    println!("== minimize at n=32 ==");
    let grid = Grid::new(32, 8.0).unwrap();
    let gopts = GaugeOptions { tol: 1e-5, max_iter: 600 };
    let t0 = Instant::now();
    let ly = loss_yau_field(w, grid);
    let ly_q = quotient(&ly, &gopts, DEFAULT_EPS_REG).unwrap();
    println!("LY quotient(32,8) = {:.5}, el = {:.5}  [{:.0}s]", ly_q.quotient, ly_q.el_residual, t0.elapsed().as_secs_f64());
    // LY-init run with tol at its own residual level
    let t0 = Instant::now();
    let mopts = MinimizeOptions { tol: ly_q.el_residual * 1.02, max_iter: 60, recenter_every: 0,
        gauge: GaugeOptions { tol: 1e-5, max_iter: 400 }, ..Default::default() };
    let tr = minimize(&ly, &mopts).unwrap();
    println!("LY-init: rows={} Q0={:.5} Qfin={:.5} conv={} [{:.0}s]",
        tr.rows.len(), tr.rows[0].quotient, tr.rows.last().unwrap().quotient, tr.converged, t0.elapsed().as_secs_f64());
    for seed in 0..3u64 {
        let t0 = Instant::now();
        let a0 = families::random_divergence_free(grid, 100 + seed, 2);
        let mopts = MinimizeOptions { tol: ly_q.el_residual, max_iter: 80, recenter_every: 25,
            gauge: GaugeOptions { tol: 1e-5, max_iter: 400 }, ..Default::default() };
        let tr = minimize(&a0, &mopts).unwrap();
        let last = tr.rows.last().unwrap();
        println!("seed {}: rows={} Qfin={:.5} el={:.4} conv={} lsfail={} rec={} [{:.0}s] ratio_vs_LY={:.3}",
            seed, tr.rows.len(), last.quotient, last.el_residual, tr.converged, tr.line_search_failed,
            tr.recenterings.len(), t0.elapsed().as_secs_f64(), last.quotient / ly_q.quotient);
    }

    println!("== conformal checks at (64,8), 1e6 samples ==");
    let grid = Grid::new(64, 8.0).unwrap();
    for (name, field) in [("bump7", families::gaussian_bump_divfree(grid, 7)),
                          ("lossyau", loss_yau_field(w, grid))] {
        let t0 = Instant::now();
        let rep = conformal_energy_check(&field, 1_000_000, 20260810).unwrap();
        println!("energy {name}: lhs={:.4} rhs={:.4} gap={:.4}% stderr={:.5} [{:.0}s]",
            rep.lhs, rep.rhs, 100.0 * rep.gap_rel, rep.mc_stderr, t0.elapsed().as_secs_f64());
    }
    {
        let t0 = Instant::now();
        let a1 = families::gaussian_bump_divfree(grid, 7);
        let a2 = families::gaussian_bump_divfree(grid, 8);
        let rep = weighted_norm_check(&a1, &a2, 2.0, 1_000_000, 20260810).unwrap();
        println!("weighted q=2 bump7-bump8: gap={:.4}% [{:.0}s]", 100.0 * rep.gap_rel, t0.elapsed().as_secs_f64());
        let fix = gauge_fix(&a1, &GaugeOptions { tol: 1e-5, max_iter: 400 }).unwrap();
        let rep = conformal_seminorm_check(&fix.a_fixed, 1_000_000, 20260810).unwrap();
        println!("seminorm identity bump7 (gauge-fixed): gap={:.4}% [{:.0}s]", 100.0 * rep.gap_rel, t0.elapsed().as_secs_f64());
    }

    println!("== gauge stability pair cost at n=32 ==");
    let grid32 = Grid::new(32, 8.0).unwrap();
    let t0 = Instant::now();
    let a1 = families::random_smooth_vector(grid32, 500, 2);
    let a2 = families::random_smooth_vector(grid32, 501, 2);
    let st = gauge_stability(&a1, &a2, &GaugeOptions { tol: 1e-4, max_iter: 400 }).unwrap();
    println!("one pair: ratio={:.4} [{:.1}s]", st.ratio, t0.elapsed().as_secs_f64());

    println!("== mollify ratios, 5 random fields at n=32 ==");
    let mut max_ratio: f64 = 0.0;
    for seed in 0..5u64 {
        let a = families::random_smooth_vector(grid32, 600 + seed, 2);
        for k in 1..=8 {
            let rep = mollify_defect(&a, 2f64.powi(-k)).unwrap();
            max_ratio = max_ratio.max(rep.ratio);
        }
    }
    println!("max mollify ratio = {max_ratio:.5}");
}
