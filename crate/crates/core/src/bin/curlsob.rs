//! Command-line entry points for the verification and minimization
//! workflows. Exit codes: 0 success, 1 operational error, 2 threshold
//! failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use curlsob::closed_forms::{
    loss_yau_field, loss_yau_spinor, pauli_expectation, zero_mode_residual, ZeroModeSign,
};
use curlsob::conformal::{conformal_energy_check, conformal_seminorm_check, weighted_norm_check};
use curlsob::families;
use curlsob::gauge::{gauge_fix, GaugeOptions};
use curlsob::io::{read_vf3, write_vf3, AnyField};
use curlsob::ops::{gradient, lp_norm};
use curlsob::variational::{
    improved_ratio, minimize, quotient, MinimizeOptions, DEFAULT_EPS_REG,
};
use curlsob::{Grid, VectorField};

/// Residual thresholds used by the gate commands. The zero-mode and EL
/// values are the truncation-aware residuals of the closed-form pair at the
/// default grid with a safety margin; the gauge gate is on the dual-norm
/// constraint residual relative to its natural scale `||A'||_3^2`.
const ZERO_MODE_GATE: f64 = 0.05;
const EL_GATE: f64 = 0.25;
const GAUGE_CONSTRAINT_GATE: f64 = 1e-3;
const CONFORMAL_GATE: f64 = 0.01;

#[derive(Parser)]
#[command(name = "curlsob", version, about = "curl Sobolev quotient toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Grid points per axis (even, >= 8)
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Box half-width L
    #[arg(long = "box", default_value_t = 8.0)]
    box_half_width: f64,
    /// Solver tolerance
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Iteration cap for solvers
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Seed for randomized inputs and Monte Carlo
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Relative curl regularization scale
    #[arg(long, default_value_t = DEFAULT_EPS_REG)]
    eps_reg: f64,
    /// Field direction w for the closed-form family, as "x,y,z"
    #[arg(long, value_parser = parse_vec3)]
    w: Option<[f64; 3]>,
    /// Constant spinor eta, as "re1,im1,re2,im2"
    #[arg(long, value_parser = parse_eta)]
    eta: Option<[f64; 4]>,
    /// Input field in vf3 format
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output field (vf3) where a command produces one
    #[arg(long = "out")]
    output: Option<PathBuf>,
    /// Built-in input family: lossyau | gaussian-bump | random-divfree
    #[arg(long)]
    init: Option<String>,
    /// Write the JSON report here (default: stdout only)
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err("expected x,y,z".into());
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("bad component {p}: {e}"))?;
    }
    Ok(out)
}

fn parse_eta(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("expected re1,im1,re2,im2".into());
    }
    let mut out = [0.0; 4];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|e| format!("bad component {p}: {e}"))?;
    }
    Ok(out)
}

#[derive(Subcommand)]
enum Command {
    /// Verify the closed-form optimizer pair: gauge constraint, EL
    /// stationarity, quotient, and the matched zero mode
    VerifyOptimizer(CommonOpts),
    /// Minimize the quotient from seeded starts
    Minimize {
        #[command(flatten)]
        common: CommonOpts,
        /// Number of seeded starts
        #[arg(long, default_value_t = 1)]
        starts: usize,
        /// EL-residual stopping tolerance
        #[arg(long, default_value_t = 0.2)]
        el_tol: f64,
        /// Recenter every this many iterations (0 disables)
        #[arg(long, default_value_t = 50)]
        recenter_every: usize,
    },
    /// Fix the nonlinear gauge of a field
    GaugeFix(CommonOpts),
    /// Zero-mode residual of a (field, spinor) pair
    ZeroMode(CommonOpts),
    /// Conformal transport identities (energy, seminorm, weighted q=2)
    ConformalCheck {
        #[command(flatten)]
        common: CommonOpts,
        /// Monte Carlo sample count
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Improved-inequality diagnostics
    Improved(CommonOpts),
}

fn eta_of(opts: &CommonOpts) -> [Complex64; 2] {
    let e = opts.eta.unwrap_or([1.0, 0.0, 0.0, 0.0]);
    [Complex64::new(e[0], e[1]), Complex64::new(e[2], e[3])]
}

fn build_field(opts: &CommonOpts, grid: Grid) -> anyhow::Result<VectorField> {
    if let Some(path) = &opts.input {
        match read_vf3(path)? {
            // the file's own grid wins when reading from disk
            AnyField::Vector(f) => Ok(f),
            other => anyhow::bail!("expected a vector field, found {:?}", other.kind()),
        }
    } else {
        let name = opts.init.as_deref().unwrap_or("lossyau");
        match name {
            "lossyau" => {
                let w = match opts.w {
                    Some(w) => w,
                    None => pauli_expectation(eta_of(opts)).w,
                };
                if (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() < 1e-14 {
                    anyhow::bail!("w must be nonzero");
                }
                Ok(loss_yau_field(w, grid))
            }
            "gaussian-bump" => Ok(families::gaussian_bump_divfree(grid, opts.seed)),
            "random-divfree" => Ok(families::random_divergence_free(grid, opts.seed, 2)),
            other => anyhow::bail!("unknown field family '{other}'"),
        }
    }
}

fn emit(report: &serde_json::Value, path: Option<&Path>) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Some(p) = path {
        std::fs::write(p, &text)?;
    }
    println!("{text}");
    Ok(())
}

#[derive(Serialize)]
struct ConfigEcho {
    n: usize,
    box_half_width: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
    eps_reg: f64,
    w: Option<[f64; 3]>,
    eta: Option<[f64; 4]>,
    init: Option<String>,
}

fn echo(opts: &CommonOpts) -> ConfigEcho {
    ConfigEcho {
        n: opts.n,
        box_half_width: opts.box_half_width,
        tol: opts.tol,
        max_iter: opts.max_iter,
        seed: opts.seed,
        eps_reg: opts.eps_reg,
        w: opts.w,
        eta: opts.eta,
        init: opts.init.clone(),
    }
}

fn grid_json(grid: Grid) -> serde_json::Value {
    json!({"n": grid.n(), "L": grid.box_half_width(), "h": grid.spacing()})
}

fn cmd_verify_optimizer(opts: &CommonOpts) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let eta = eta_of(opts);
    let w = match opts.w {
        Some(w) => w,
        None => pauli_expectation(eta).w,
    };
    if (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() < 1e-14 {
        anyhow::bail!("w must be nonzero");
    }
    let a = loss_yau_field(w, grid);
    let psi = loss_yau_spinor(eta, grid);

    let gopts = GaugeOptions { tol: opts.tol, max_iter: opts.max_iter };
    let q = quotient(&a, &gopts, opts.eps_reg)?;
    let fix = gauge_fix(&a, &gopts)?;
    let a3 = lp_norm(&a, 3.0)?;
    let grad_phi_ratio = lp_norm(&gradient(&fix.phi0)?, 3.0)? / a3;
    let constraint_rel = fix.constraint_residual / fix.seminorm.powi(2);
    let zm = zero_mode_residual(&a, &psi, ZeroModeSign::Minus)?;

    let pass = zm.weighted_relative_residual <= ZERO_MODE_GATE
        && q.el_residual <= EL_GATE
        && constraint_rel <= GAUGE_CONSTRAINT_GATE;
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "verify-optimizer",
        "config": echo(opts),
        "grid": grid_json(grid),
        "quotient": q,
        "gauge": {
            "grad_phi_ratio": grad_phi_ratio,
            "constraint_residual": fix.constraint_residual,
            "constraint_residual_rel": constraint_rel,
            "iterations": fix.iterations,
            "converged": fix.converged,
        },
        "zero_mode": zm,
        "thresholds": {
            "zero_mode_weighted": ZERO_MODE_GATE,
            "el_residual": EL_GATE,
            "gauge_constraint_rel": GAUGE_CONSTRAINT_GATE,
        },
        "pass": pass,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(if pass { 0 } else { 2 })
}

fn format_csv(traces: &[(usize, curlsob::variational::MinimizeTrace)]) -> String {
    let mut out = String::from("start,iteration,quotient,el_residual,step\n");
    for (start, trace) in traces {
        for row in &trace.rows {
            out.push_str(&format!(
                "{start},{},{:.17e},{:.17e},{:.17e}\n",
                row.iteration, row.quotient, row.el_residual, row.step
            ));
        }
    }
    out
}

fn cmd_minimize(
    opts: &CommonOpts,
    starts: usize,
    el_tol: f64,
    recenter_every: usize,
) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let mut traces = Vec::new();
    let mut summaries = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for start in 0..starts.max(1) {
        let seed = opts.seed + start as u64;
        let a0 = if opts.init.as_deref() == Some("lossyau") || opts.input.is_some() {
            build_field(opts, grid)?
        } else {
            let mut o = opts.clone();
            o.seed = seed;
            if o.init.is_none() {
                o.init = Some("random-divfree".into());
            }
            build_field(&o, grid)?
        };
        let mopts = MinimizeOptions {
            tol: el_tol,
            max_iter: opts.max_iter.min(1000),
            eps_reg: opts.eps_reg,
            recenter_every,
            seed,
            ..Default::default()
        };
        let trace = minimize(&a0, &mopts)?;
        let last = *trace.rows.last().expect("trace has rows");
        if best.is_none_or(|(_, q)| last.quotient < q) {
            best = Some((start, last.quotient));
        }
        summaries.push(json!({
            "start": start,
            "seed": seed,
            "iterations": trace.rows.len() - 1,
            "final_quotient": last.quotient,
            "final_el_residual": last.el_residual,
            "converged": trace.converged,
            "line_search_failed": trace.line_search_failed,
            "recenterings": trace.recenterings,
        }));
        traces.push((start, trace));
    }

    let csv = format_csv(&traces);
    if let Some(p) = &opts.output {
        std::fs::write(p, &csv)?;
        // final field of the first start next to the trace
        if let Some((_, trace)) = traces.first() {
            let mut field_path = p.clone();
            field_path.set_extension("vf3");
            write_vf3(&field_path, &AnyField::Vector(trace.final_field.clone()))?;
        }
    }

    // closed-form baseline on the same grid
    let w = opts.w.unwrap_or([0.0, 0.0, 1.0]);
    let ly = loss_yau_field(w, grid);
    let gopts = GaugeOptions { tol: 1e-6, max_iter: 600 };
    let ly_quotient = quotient(&ly, &gopts, opts.eps_reg)?.quotient;
    let (best_start, best_q) = best.expect("at least one start");

    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "minimize",
        "config": echo(opts),
        "grid": grid_json(grid),
        "starts": summaries,
        "best_start": best_start,
        "best_quotient": best_q,
        "lossyau_quotient": ly_quotient,
        "best_over_lossyau": best_q / ly_quotient,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(0)
}

fn cmd_gauge_fix(opts: &CommonOpts) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let a = build_field(opts, grid)?;
    let grid = a.grid();
    let gopts = GaugeOptions { tol: opts.tol, max_iter: opts.max_iter };
    let fix = gauge_fix(&a, &gopts)?;
    let a3 = lp_norm(&a, 3.0)?;
    let constraint_rel = if fix.seminorm > 0.0 {
        fix.constraint_residual / fix.seminorm.powi(2)
    } else {
        0.0
    };
    if let Some(p) = &opts.output {
        write_vf3(p, &AnyField::Vector(fix.a_fixed.clone()))?;
        let mut phi_path = p.clone();
        phi_path.set_extension("phi0.vf3");
        write_vf3(&phi_path, &AnyField::Scalar(fix.phi0.clone()))?;
    }
    let pass = fix.converged && constraint_rel <= GAUGE_CONSTRAINT_GATE;
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "gauge-fix",
        "config": echo(opts),
        "grid": grid_json(grid),
        "input_l3_norm": a3,
        "seminorm": fix.seminorm,
        "grad_phi_ratio": lp_norm(&gradient(&fix.phi0)?, 3.0)? / a3.max(1e-300),
        "constraint_residual": fix.constraint_residual,
        "constraint_residual_rel": constraint_rel,
        "iterations": fix.iterations,
        "converged": fix.converged,
        "threshold": GAUGE_CONSTRAINT_GATE,
        "pass": pass,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(if pass { 0 } else { 2 })
}

fn cmd_zero_mode(opts: &CommonOpts) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let eta = eta_of(opts);
    if (eta[0].norm_sqr() + eta[1].norm_sqr()).sqrt() < 1e-14 {
        anyhow::bail!("eta must be nonzero");
    }
    let w = match opts.w {
        Some(w) => w,
        None => pauli_expectation(eta).w,
    };
    if (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt() < 1e-14 {
        anyhow::bail!("w must be nonzero");
    }
    let a = if opts.input.is_some() {
        build_field(opts, grid)?
    } else {
        loss_yau_field(w, grid)
    };
    let psi = loss_yau_spinor(eta, a.grid());
    let zm = zero_mode_residual(&a, &psi, ZeroModeSign::Minus)?;
    let pass = zm.weighted_relative_residual <= ZERO_MODE_GATE;
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "zero-mode",
        "config": echo(opts),
        "grid": grid_json(a.grid()),
        "w": w,
        "zero_mode": zm,
        "threshold": ZERO_MODE_GATE,
        "pass": pass,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(if pass { 0 } else { 2 })
}

fn cmd_conformal_check(opts: &CommonOpts, samples: usize) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let mut o = opts.clone();
    if o.init.is_none() && o.input.is_none() {
        o.init = Some("gaussian-bump".into());
    }
    let a = build_field(&o, grid)?;
    let grid = a.grid();
    let energy = conformal_energy_check(&a, samples, opts.seed)?;
    // weighted identity against a second member of the same family
    let a2 = families::gaussian_bump_divfree(grid, opts.seed + 1);
    let weighted = weighted_norm_check(&a, &a2, 2.0, samples, opts.seed)?;
    // seminorm identity at the gauge-fixed point
    let fix = gauge_fix(&a, &GaugeOptions { tol: 1e-6, max_iter: 600 })?;
    let seminorm = conformal_seminorm_check(&fix.a_fixed, samples, opts.seed)?;
    let pass = energy.gap_rel <= CONFORMAL_GATE
        && weighted.gap_rel <= CONFORMAL_GATE
        && seminorm.gap_rel <= CONFORMAL_GATE;
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "conformal-check",
        "config": echo(&o),
        "grid": grid_json(grid),
        "energy_identity": energy,
        "weighted_identity_q2": weighted,
        "seminorm_identity": seminorm,
        "threshold": CONFORMAL_GATE,
        "pass": pass,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(if pass { 0 } else { 2 })
}

fn cmd_improved(opts: &CommonOpts) -> anyhow::Result<i32> {
    let t0 = Instant::now();
    let grid = Grid::new(opts.n, opts.box_half_width)?;
    let mut o = opts.clone();
    if o.init.is_none() && o.input.is_none() {
        o.init = Some("gaussian-bump".into());
    }
    let a = build_field(&o, grid)?;
    let gopts = GaugeOptions { tol: opts.tol.max(1e-6), max_iter: opts.max_iter };
    let rep = improved_ratio(&a, &gopts)?;
    let pass = rep.ratio.is_finite() && rep.hoelder_ratio.is_finite();
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": "improved",
        "config": echo(&o),
        "grid": grid_json(a.grid()),
        "improved": rep,
        "pass": pass,
        "wall_time_s": t0.elapsed().as_secs_f64(),
    });
    emit(&report, opts.json.as_deref())?;
    Ok(if pass { 0 } else { 2 })
}

fn main() {
    // cap the worker pool before any parallel work
    if let Ok(threads) = std::env::var("CURLSOB_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::VerifyOptimizer(opts) => cmd_verify_optimizer(opts),
        Command::Minimize { common, starts, el_tol, recenter_every } => {
            cmd_minimize(common, *starts, *el_tol, *recenter_every)
        }
        Command::GaugeFix(opts) => cmd_gauge_fix(opts),
        Command::ZeroMode(opts) => cmd_zero_mode(opts),
        Command::ConformalCheck { common, samples } => cmd_conformal_check(common, *samples),
        Command::Improved(opts) => cmd_improved(opts),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
