use contour_opt::gradient::ShapeGradient;
use contour_opt::io;
use contour_opt::optimize::{kappa_test, optimize_shape, KappaTable, Objective, OptimizationTrace};
use contour_opt::presets::perturbation;
use contour_opt::solver::{Discretization, PhysicsConfig};
use contour_opt::{ChebGrid, Contour};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{preset_contour, Combination, RunConfig, PLATEAU_WINDOW};
use crate::manifest::Recorder;
use crate::{CliError, EXIT_NOT_CONVERGED, EXIT_VALIDATION};

const SUMMARY_HEADER: [&str; 7] = ["contour", "zeta", "n", "m", "tolerance", "best_deviation", "pass"];

type CmdResult = Result<u8, CliError>;

fn io_err(e: contour_opt::Error) -> CliError {
    CliError::solver(e.to_string())
}

/// Direct and adjoint solve plus the shape gradient for one contour.
pub fn solve(config: &RunConfig, rec: &mut Recorder) -> CmdResult {
    let physics = config.physics()?;
    let opt = &config.optim;
    rec.physics(&physics);
    rec.resolution(opt.n, opt.m);
    let contour = config.contour(opt.m)?;
    let disc = rec.phase("setup", |_| Discretization::new(opt.n)).map_err(CliError::from_setup)?;
    let objective = Objective::new(&disc, &physics, opt.alpha, opt.l0, opt.m).map_err(CliError::from_setup)?;
    let eval = rec.phase("solve", |_| objective.evaluate(&contour)).map_err(CliError::from_run)?;
    let grad = ShapeGradient::new(eval.gradient.clone(), opt.ell);

    rec.phase("export", |rec| -> Result<(), CliError> {
        io::save_contour(&rec.file("contour.csv")?, &eval.contour).map_err(io_err)?;
        io::save_traces(&rec.file("traces.csv")?, &eval.direct).map_err(io_err)?;
        io::save_traces(&rec.file("adjoint_traces.csv")?, &eval.adjoint).map_err(io_err)?;
        io::save_gradient(&rec.file("gradient.csv")?, &eval.contour, &grad).map_err(io_err)?;
        if config.outputs.fields {
            let grid = disc.grid();
            io::save_grid(&rec.file("u.csv")?, grid, &eval.direct.u_grid).map_err(io_err)?;
            io::save_grid(&rec.file("adjoint.csv")?, grid, &eval.adjoint.u_grid).map_err(io_err)?;
        }
        Ok(())
    })?;

    let jump = eval.direct.flux_jump_residual(physics.k, physics.gamma, physics.u0).max_abs();
    let d = &eval.direct.diagnostics;
    rec.summary(json!({
        "J": eval.j,
        "length": eval.contour.length(),
        "flux_jump_residual": jump,
        "relative_residual": d.relative_residual,
        "backward_error": d.backward_error,
        "condition": d.condition,
    }));
    println!("J = {:.10e}, L = {:.6}, flux-jump residual = {jump:.2e}", eval.j, eval.contour.length());
    Ok(0)
}

fn snapshot_name(iter: usize) -> String {
    format!("snapshots/contour_{iter:04}.csv")
}

fn save_history(rec: &mut Recorder, trace: &OptimizationTrace, snapshots: bool) -> Result<(), CliError> {
    io::save_history(&rec.file("history.csv")?, trace).map_err(io_err)?;
    if snapshots {
        for r in &trace.records {
            io::save_contour(&rec.file(&snapshot_name(r.iter))?, &r.contour).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Gradient descent; exit 5 when the iteration budget ran out.
pub fn optimize(config: &RunConfig, rec: &mut Recorder) -> CmdResult {
    let physics = config.physics()?;
    let opt = config.optim.to_config();
    opt.validate().map_err(CliError::from_setup)?;
    rec.physics(&physics);
    rec.resolution(opt.n, opt.m);
    let initial = config.contour(opt.m)?;
    if !initial.contains_in_domain(opt.margin) {
        return Err(CliError::config(format!(
            "initial contour must keep distance {} from the boundary of the square",
            opt.margin
        )));
    }

    let outcome = rec.phase("optimize", |_| optimize_shape(&opt, &physics, &initial));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            save_history(rec, &e.trace, config.outputs.snapshots)?;
            rec.summary(json!({ "error": e.error.to_string(), "iterations": e.trace.records.len() }));
            return Err(CliError::from_run(e.error));
        }
    };

    rec.phase("export", |rec| -> Result<(), CliError> {
        save_history(rec, &outcome.trace, config.outputs.snapshots)?;
        io::save_contour(&rec.file("final_contour.csv")?, &outcome.contour).map_err(io_err)?;
        if config.outputs.fields {
            let disc = Discretization::new(opt.n).map_err(CliError::from_setup)?;
            let objective = Objective::new(&disc, &physics, opt.alpha, opt.l0, opt.m).map_err(CliError::from_setup)?;
            let eval = objective.evaluate(&outcome.contour).map_err(CliError::from_run)?;
            io::save_grid(&rec.file("u.csv")?, disc.grid(), &eval.direct.u_grid).map_err(io_err)?;
            io::save_traces(&rec.file("traces.csv")?, &eval.direct).map_err(io_err)?;
        }
        Ok(())
    })?;

    let js = outcome.trace.j_values();
    let (j0, jn) = (js[0], *js.last().unwrap());
    rec.summary(json!({
        "stop_reason": format!("{:?}", outcome.reason),
        "converged": outcome.reason.converged(),
        "iterations": outcome.trace.records.len() - 1,
        "initial_J": j0,
        "final_J": jn,
        "initial_length": initial.length(),
        "final_length": outcome.contour.length(),
    }));
    println!(
        "{:?} after {} iterations: J {j0:.6e} -> {jn:.6e}, L {:.6} -> {:.6}",
        outcome.reason,
        outcome.trace.records.len() - 1,
        initial.length(),
        outcome.contour.length()
    );
    Ok(if outcome.reason.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn run_kappa(physics: &PhysicsConfig, contour: &Contour, zeta: u32, n: usize, m: usize, eps: &[f64]) -> contour_opt::Result<KappaTable> {
    let disc = Discretization::new(n)?;
    let objective = Objective::new(&disc, physics, 0.0, 1.0, m)?;
    let base = objective.remesh(contour)?;
    kappa_test(&objective, &base, &perturbation(&base, zeta), eps)
}

fn check_epsilons(eps: &[f64]) -> Result<(), CliError> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CliError::config("epsilons must be a non-empty list of positive numbers"));
    }
    Ok(())
}

/// κ(ε) table for the configured contour and one perturbation.
pub fn kappa(config: &RunConfig, rec: &mut Recorder) -> CmdResult {
    let job = config.kappa.as_ref().ok_or_else(|| CliError::config("missing `kappa` section"))?;
    check_epsilons(&job.epsilons)?;
    if job.zeta == 0 {
        return Err(CliError::config("kappa.zeta must be at least 1"));
    }
    let physics = config.physics()?;
    let (n, m) = (config.optim.n, config.optim.m);
    rec.physics(&physics);
    rec.resolution(n, m);
    let contour = config.contour(m)?;
    let table = rec.phase("kappa", |_| run_kappa(&physics, &contour, job.zeta, n, m, &job.epsilons)).map_err(CliError::from_run)?;
    io::save_kappa(&rec.file("kappa.csv")?, &table).map_err(io_err)?;
    let best = table.best_deviation(PLATEAU_WINDOW.0, PLATEAU_WINDOW.1);
    rec.summary(json!({ "J": table.j0, "directional_derivative": table.directional, "best_deviation": best, "tolerance": job.tolerance }));
    for p in &table.points {
        println!("eps = {:.1e}  kappa = {:.12}  |kappa-1| = {:.3e}", p.epsilon, p.kappa, (p.kappa - 1.0).abs());
    }
    Ok(0)
}

fn combo_file(c: &Combination) -> String {
    format!("kappa/{}_z{}_N{}_M{}.csv", c.contour, c.zeta, c.n, c.m)
}

fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("CONTOUR_OPT_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::config(format!("CONTOUR_OPT_THREADS must be a positive integer, got '{v}'"))
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::solver(e.to_string()))
}

/// Every κ-test combination; exit 4 if any plateau misses its tolerance.
pub fn validate(config: &RunConfig, rec: &mut Recorder) -> CmdResult {
    let job = config.validate.as_ref().ok_or_else(|| CliError::config("missing `validate` section"))?;
    if job.combinations.is_empty() {
        return Err(CliError::config("validate.combinations is empty"));
    }
    check_epsilons(&job.epsilons)?;
    let physics = config.physics()?;
    rec.physics(&physics);
    for c in &job.combinations {
        if c.zeta == 0 {
            return Err(CliError::config(format!("{}: zeta must be at least 1", c.contour)));
        }
        ChebGrid::new(c.n).map_err(CliError::from_setup)?;
        preset_contour(&c.contour, c.m)?;
        rec.resolution(c.n, c.m);
    }

    let pool = thread_pool()?;
    let results: Vec<contour_opt::Result<KappaTable>> = rec.phase("kappa", |_| {
        pool.install(|| {
            job.combinations
                .par_iter()
                .map(|c| {
                    let contour = preset_contour(&c.contour, c.m).map_err(|e| contour_opt::Error::Geometry(e.message))?;
                    run_kappa(&physics, &contour, c.zeta, c.n, c.m, &job.epsilons)
                })
                .collect()
        })
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (c, result) in job.combinations.iter().zip(results) {
        let label = format!("{} zeta{} (N={}, M={})", c.contour, c.zeta, c.n, c.m);
        match result {
            Ok(table) => {
                io::save_kappa(&rec.file(&combo_file(c))?, &table).map_err(io_err)?;
                let best = table.best_deviation(PLATEAU_WINDOW.0, PLATEAU_WINDOW.1);
                let pass = best <= c.tolerance;
                println!("{} {label}: best |kappa-1| = {best:.3e} (tolerance {:.0e})", if pass { "PASS" } else { "FAIL" }, c.tolerance);
                if !pass {
                    failures.push(format!("{label}: best |kappa-1| = {best:.3e} > {:.0e}", c.tolerance));
                }
                rows.push(vec![c.contour.clone(), c.zeta.to_string(), c.n.to_string(), c.m.to_string(), io::fmt_f64(c.tolerance), io::fmt_f64(best), pass.to_string()]);
            }
            Err(e) => {
                println!("FAIL {label}: {e}");
                failures.push(format!("{label}: {e}"));
                rows.push(vec![c.contour.clone(), c.zeta.to_string(), c.n.to_string(), c.m.to_string(), io::fmt_f64(c.tolerance), "NaN".into(), "false".into()]);
            }
        }
    }
    write_summary(rec, &rows)?;
    rec.summary(json!({ "combinations": job.combinations.len(), "failures": failures }));
    if failures.is_empty() {
        Ok(0)
    } else {
        eprintln!("{} of {} combinations failed:", failures.len(), job.combinations.len());
        for f in &failures {
            eprintln!("  {f}");
        }
        Ok(EXIT_VALIDATION)
    }
}

fn write_summary(rec: &mut Recorder, rows: &[Vec<String>]) -> Result<(), CliError> {
    let file = std::fs::File::create(rec.file("summary.csv")?).map_err(|e| CliError::solver(e.to_string()))?;
    io::write_rows(file, &SUMMARY_HEADER, rows.iter().cloned()).map_err(io_err)
}
