//! Cost functional, finite-difference gradient check, and the
//! Polak–Ribière descent over contour shapes.

use crate::error::{argument, geometry, Error, Result};
use crate::geometry::{resample_equal_arclength, Contour, ContourFunction};
use crate::gradient::{assemble_l2_gradient, ShapeGradient};
use crate::solver::{solve_adjoint, solve_direct, CoupledSolution, CoupledSystem, Discretization, PhysicsConfig};
use crate::quadrature::SplitQuadrature;
use crate::spectral::GridField;

/// Radial Gauss–Legendre nodes of the contour-adapted cost quadrature.
const RADIAL_NODES: usize = 20;
use std::fmt;

/// Settings of the descent loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    /// Weight of the length penalty; zero disables it.
    pub alpha: f64,
    /// Target contour length, used when `alpha > 0`.
    pub l0: f64,
    /// Sobolev smoothing scale.
    pub ell: f64,
    pub eps_j: f64,
    pub eps_tau: f64,
    pub max_iters: usize,
    pub n: usize,
    pub m: usize,
    /// Every iterate must lie in `[−1 + margin, 1 − margin]²`.
    pub margin: f64,
    /// Relative bracket tolerance of the line search.
    pub line_tol: f64,
    pub line_max_evals: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            alpha: 0.0,
            l0: 1.0,
            ell: 0.1,
            eps_j: 1e-3,
            eps_tau: 1e-8,
            max_iters: 100,
            n: 50,
            m: 100,
            margin: 0.02,
            line_tol: 1e-4,
            line_max_evals: 50,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(argument(format!("alpha must be non-negative, got {}", self.alpha)));
        }
        if self.alpha > 0.0 && !(self.l0 > 0.0) {
            return Err(argument(format!("target length L0 must be positive, got {}", self.l0)));
        }
        if !(self.ell >= 0.0) {
            return Err(argument(format!("smoothing scale must be non-negative, got {}", self.ell)));
        }
        if !(self.eps_j > 0.0 && self.eps_tau > 0.0) {
            return Err(argument("stopping tolerances must be positive"));
        }
        if !(self.margin >= 0.0 && self.margin < 1.0) {
            return Err(argument(format!("containment margin must lie in [0, 1), got {}", self.margin)));
        }
        if !(self.line_tol > 0.0) || self.line_max_evals < 3 {
            return Err(argument("line search needs a positive tolerance and at least 3 evaluations"));
        }
        Ok(())
    }
}

/// The cost functional on a fixed discretization.
pub struct Objective<'a> {
    disc: &'a Discretization,
    physics: PhysicsConfig,
    alpha: f64,
    l0: f64,
    m: usize,
    target: GridField,
}

/// Cost, solutions and gradient at one contour.
pub struct Evaluation {
    pub contour: Contour,
    pub j: f64,
    pub direct: CoupledSolution,
    pub adjoint: CoupledSolution,
    pub gradient: ContourFunction,
}

impl<'a> Objective<'a> {
    /// `m` is the node count every contour is resampled to before solving.
    pub fn new(disc: &'a Discretization, physics: &PhysicsConfig, alpha: f64, l0: f64, m: usize) -> Result<Objective<'a>> {
        physics.validate()?;
        let target = physics.target.sample(disc.grid())?;
        Ok(Objective { disc, physics: physics.clone(), alpha, l0, m, target })
    }

    pub fn physics(&self) -> &PhysicsConfig {
        &self.physics
    }

    pub fn discretization(&self) -> &Discretization {
        self.disc
    }

    /// The contour at `m` nodes equispaced in arc length.
    pub fn remesh(&self, contour: &Contour) -> Result<Contour> {
        resample_equal_arclength(contour, self.m)
    }

    fn tracking(&self, direct: &CoupledSolution) -> Result<f64> {
        let grid = self.disc.grid();
        let region = self.physics.region;
        let m = direct.contour.len();
        if let Some(rule) = SplitQuadrature::new(&direct.contour, region, (m / 4).max(24), RADIAL_NODES) {
            let mut total = 0.0;
            for (points, weights) in [(&rule.inside, &rule.inside_weights), (&rule.outside, &rule.outside_weights)] {
                let u = direct.eval_points(grid, points)?;
                let target = self.physics.target.eval_points(grid, points)?;
                total += u.iter().zip(&target).zip(weights.iter()).map(|((u, t), w)| 0.5 * w * (u - t) * (u - t)).sum::<f64>();
            }
            return Ok(total);
        }
        log::debug!("contour-adapted quadrature unavailable; integrating on the grid");
        let misfit = GridField {
            n: direct.u_grid.n,
            values: direct.u_grid.values.iter().zip(&self.target.values).map(|(u, t)| 0.5 * (u - t) * (u - t)).collect(),
        };
        grid.integrate_domain(&misfit, region)
    }

    fn penalty(&self, length: f64) -> f64 {
        if self.alpha > 0.0 {
            0.5 * self.alpha * (length - self.l0).powi(2)
        } else {
            0.0
        }
    }

    fn direct(&self, contour: &Contour) -> Result<(Contour, f64, CoupledSolution)> {
        let c = self.remesh(contour)?;
        let sys = CoupledSystem::new(self.disc, &self.physics, &c)?;
        let direct = solve_direct(&sys)?;
        let j = self.tracking(&direct)? + self.penalty(c.length());
        Ok((c, j, direct))
    }

    /// Cost of the contour after resampling to equal arc length.
    pub fn value(&self, contour: &Contour) -> Result<f64> {
        Ok(self.direct(contour)?.1)
    }

    /// Cost, direct and adjoint solutions, and the L² gradient.
    pub fn evaluate(&self, contour: &Contour) -> Result<Evaluation> {
        let c = self.remesh(contour)?;
        let sys = CoupledSystem::new(self.disc, &self.physics, &c)?;
        let direct = solve_direct(&sys)?;
        let j = self.tracking(&direct)? + self.penalty(c.length());
        let adjoint = solve_adjoint(&sys, &direct)?;
        let gradient = assemble_l2_gradient(&direct, &adjoint, &c, &self.physics, self.alpha, self.l0)?;
        Ok(Evaluation { contour: c, j, direct, adjoint, gradient })
    }
}

/// `½∫_A (u − ū)² dΩ + (α/2)(L − L₀)²` for a single contour.
pub fn evaluate_j(physics: &PhysicsConfig, alpha: f64, l0: f64, contour: &Contour, disc: &Discretization) -> Result<f64> {
    Objective::new(disc, physics, alpha, l0, contour.len())?.value(contour)
}

/// One row of a κ-test table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaPoint {
    pub epsilon: f64,
    pub j: f64,
    pub kappa: f64,
}

/// Result of a κ-test at one contour and perturbation.
#[derive(Debug, Clone)]
pub struct KappaTable {
    pub j0: f64,
    /// `⟨∇J, ζ⟩` in L².
    pub directional: f64,
    pub points: Vec<KappaPoint>,
}

impl KappaTable {
    /// Smallest `|κ − 1|` over steps in `[lo, hi]`.
    pub fn best_deviation(&self, lo: f64, hi: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.epsilon >= lo && p.epsilon <= hi)
            .map(|p| (p.kappa - 1.0).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Compares finite differences of J along `ζn` with the adjoint gradient.
pub fn kappa_test(objective: &Objective, contour: &Contour, zeta: &ContourFunction, epsilons: &[f64]) -> Result<KappaTable> {
    let base = objective.evaluate(contour)?;
    if zeta.len() != base.contour.len() {
        return Err(argument(format!(
            "perturbation has {} samples for a contour of {} nodes",
            zeta.len(),
            base.contour.len()
        )));
    }
    let directional = base.gradient.inner_l2(zeta);
    if directional == 0.0 {
        return Err(argument("perturbation is orthogonal to the gradient (zero denominator)"));
    }
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let shift: Vec<f64> = zeta.values.iter().map(|z| eps * z).collect();
        let moved = base
            .contour
            .displaced_along_normals(&shift)
            .map_err(|e| geometry(format!("perturbation with epsilon = {eps:e} is invalid: {e}")))?;
        if !inside_domain(&moved, 0.0) {
            return Err(geometry(format!("perturbation with epsilon = {eps:e} leaves the domain")));
        }
        let j = objective.value(&moved)?;
        points.push(KappaPoint { epsilon: eps, j, kappa: (j - base.j) / (eps * directional) });
    }
    Ok(KappaTable { j0: base.j, directional, points })
}

fn inside_domain(contour: &Contour, margin: f64) -> bool {
    let lim = 1.0 - margin;
    contour.points().iter().all(|p| p[0].abs() < lim && p[1].abs() < lim)
}

/// Outcome of a line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchResult {
    pub tau: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Brent minimization of `phi` on `[0, tau_max]`, given `phi(0) = f0`.
///
/// The upper endpoint is also evaluated, so a monotonically decreasing
/// objective returns `tau_max`. When nothing below `f0` is found the result
/// has `tau = 0`.
pub fn brent_line_search(
    mut phi: impl FnMut(f64) -> Result<f64>,
    f0: f64,
    tau_max: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<LineSearchResult> {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (0.0, tau_max);
    let mut x = a + GOLDEN * (b - a);
    let mut fx = phi(x)?;
    let mut evals = 1;
    let (mut w, mut v, mut fw, mut fv) = (x, x, fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let abs_tol = 1e-3 * rel_tol * tau_max;
    while evals < max_evals - 1 {
        let xm = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = phi(u)?;
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    let f_end = phi(tau_max)?;
    evals += 1;
    let (tau, value) = if f_end < fx { (tau_max, f_end) } else { (x, fx) };
    if value < f0 {
        Ok(LineSearchResult { tau, value, evaluations: evals })
    } else {
        Ok(LineSearchResult { tau: 0.0, value: f0, evaluations: evals })
    }
}

/// One iteration of the descent loop.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iter: usize,
    pub j: f64,
    pub length: f64,
    /// Step accepted to reach this iterate (0 for the initial guess).
    pub tau: f64,
    pub grad_l2_norm: f64,
    pub grad_h1_norm: f64,
    pub contour: Contour,
}

#[derive(Debug, Clone, Default)]
pub struct OptimizationTrace {
    pub records: Vec<IterationRecord>,
}

impl OptimizationTrace {
    pub fn j_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.j).collect()
    }
}

/// Why the descent loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `|τ| < eps_tau`.
    StepTolerance,
    /// `|ΔJ| < eps_J |J|`.
    CostTolerance,
    /// Gradient vanished identically.
    ZeroGradient,
    /// J is zero up to round-off in the temperature, a global minimum.
    ZeroCost,
    /// No decrease along steepest descent either.
    Stagnation,
    MaxIterations,
}

impl StopReason {
    pub fn converged(self) -> bool {
        self != StopReason::MaxIterations
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationOutcome {
    pub contour: Contour,
    pub trace: OptimizationTrace,
    pub reason: StopReason,
}

/// Failure of a run, with everything recorded up to the failure.
#[derive(Debug)]
pub struct OptimizeError {
    pub error: Error,
    pub trace: OptimizationTrace,
}

impl fmt::Display for OptimizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} recorded iterates)", self.error, self.trace.records.len())
    }
}

impl std::error::Error for OptimizeError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Largest number of halvings of the initial step bound.
const MAX_BRACKET_HALVINGS: usize = 60;

/// Runs the descent from `initial`.
pub fn optimize_shape(
    config: &OptimConfig,
    physics: &PhysicsConfig,
    initial: &Contour,
) -> std::result::Result<OptimizationOutcome, OptimizeError> {
    let mut trace = OptimizationTrace::default();
    match run(config, physics, initial, &mut trace) {
        Ok((contour, reason)) => Ok(OptimizationOutcome { contour, trace, reason }),
        Err(error) => Err(OptimizeError { error, trace }),
    }
}

fn record(trace: &mut OptimizationTrace, iter: usize, tau: f64, eval: &Evaluation, grad: &ShapeGradient) {
    trace.records.push(IterationRecord {
        iter,
        j: eval.j,
        length: eval.contour.length(),
        tau,
        grad_l2_norm: grad.l2.norm_l2(),
        grad_h1_norm: grad.h1.inner_h1(&grad.h1, grad.smoothing_scale).sqrt(),
        contour: eval.contour.clone(),
    });
}

fn check_iterate(contour: &Contour, margin: f64) -> Result<()> {
    if !inside_domain(contour, margin) {
        return Err(geometry(format!("iterate left the domain shrunk by margin {margin}")));
    }
    if !contour.is_simple() {
        return Err(geometry("iterate self-intersects"));
    }
    Ok(())
}

fn run(config: &OptimConfig, physics: &PhysicsConfig, initial: &Contour, trace: &mut OptimizationTrace) -> Result<(Contour, StopReason)> {
    config.validate()?;
    let disc = Discretization::new(config.n)?;
    let objective = Objective::new(&disc, physics, config.alpha, config.l0, config.m)?;
    let start = objective.remesh(initial)?;
    check_iterate(&start, config.margin)?;

    let mut eval = objective.evaluate(&start)?;
    let mut grad = ShapeGradient::new(eval.gradient.clone(), config.ell);
    record(trace, 0, 0.0, &eval, &grad);
    let mut previous: Option<(ContourFunction, ContourFunction)> = None;
    let mut steepest_only = false;

    for iter in 1..=config.max_iters {
        let g = &grad.h1;
        let length = eval.contour.length();
        if g.max_abs() == 0.0 {
            return Ok((eval.contour, StopReason::ZeroGradient));
        }
        let floor = 1e-10 * eval.direct.u_grid.max_abs().max(1.0);
        if eval.j <= floor * floor {
            return Ok((eval.contour, StopReason::ZeroCost));
        }
        let mut direction = negate(g);
        if let (Some((g_prev, d_prev)), false) = (&previous, steepest_only) {
            let g_prev = ContourFunction::new(g_prev.values.clone(), length);
            let d_prev = ContourFunction::new(d_prev.values.clone(), length);
            let diff = ContourFunction::new(g.values.iter().zip(&g_prev.values).map(|(a, b)| a - b).collect(), length);
            let beta = g.inner_h1(&diff, config.ell) / g_prev.inner_h1(&g_prev, config.ell);
            if beta > 0.0 && beta.is_finite() {
                let candidate =
                    ContourFunction::new(direction.values.iter().zip(&d_prev.values).map(|(a, b)| a + beta * b).collect(), length);
                if candidate.inner_h1(g, config.ell) < 0.0 {
                    direction = candidate;
                }
            }
        }

        let dmax = direction.max_abs();
        let mut tau_max = 0.1 / dmax;
        let mut halvings = 0;
        while !step_is_admissible(&eval.contour, &direction, tau_max, config.margin) {
            tau_max *= 0.5;
            halvings += 1;
            if halvings > MAX_BRACKET_HALVINGS {
                return Ok((eval.contour, StopReason::Stagnation));
            }
        }

        let base = eval.contour.clone();
        let phi = |tau: f64| -> Result<f64> {
            let moved = match displace(&base, &direction, tau) {
                Ok(c) => c,
                Err(Error::Geometry(_)) => return Ok(f64::INFINITY),
                Err(e) => return Err(e),
            };
            match objective.value(&moved) {
                Err(Error::Geometry(_)) => Ok(f64::INFINITY),
                other => other,
            }
        };
        let search = brent_line_search(phi, eval.j, tau_max, config.line_tol, config.line_max_evals)?;
        log::info!(
            "iter {iter}: J = {:.10e}, tau_max = {tau_max:.3e}, tau = {:.3e} ({} evaluations)",
            eval.j,
            search.tau,
            search.evaluations
        );
        if search.tau == 0.0 {
            if steepest_only || previous.is_none() {
                return Ok((eval.contour, StopReason::Stagnation));
            }
            steepest_only = true;
            continue;
        }
        steepest_only = false;

        let next = objective.remesh(&displace(&base, &direction, search.tau)?)?;
        check_iterate(&next, config.margin)?;
        let new_eval = objective.evaluate(&next)?;
        let new_grad = ShapeGradient::new(new_eval.gradient.clone(), config.ell);
        debug_assert!(new_grad.helmholtz_residual() < 1e-9 * new_grad.l2.max_abs().max(1.0));
        record(trace, iter, search.tau, &new_eval, &new_grad);

        let dj = (new_eval.j - eval.j).abs();
        let j_old = eval.j;
        previous = Some((grad.h1.clone(), direction));
        eval = new_eval;
        grad = new_grad;
        if search.tau.abs() < config.eps_tau {
            return Ok((eval.contour, StopReason::StepTolerance));
        }
        if dj < config.eps_j * j_old.abs() {
            return Ok((eval.contour, StopReason::CostTolerance));
        }
    }
    Ok((eval.contour, StopReason::MaxIterations))
}

fn negate(f: &ContourFunction) -> ContourFunction {
    ContourFunction::new(f.values.iter().map(|v| -v).collect(), f.length)
}

fn displace(contour: &Contour, direction: &ContourFunction, tau: f64) -> Result<Contour> {
    let shift: Vec<f64> = direction.values.iter().map(|d| tau * d).collect();
    contour.displaced_along_normals(&shift)
}

fn step_is_admissible(contour: &Contour, direction: &ContourFunction, tau: f64, margin: f64) -> bool {
    match displace(contour, direction, tau) {
        Ok(c) => inside_domain(&c, margin) && c.is_simple(),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_minimum() {
        let r = brent_line_search(|t| Ok((t - 2.0) * (t - 2.0)), 4.0, 5.0, 1e-4, 50).unwrap();
        assert!((r.tau - 2.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn brent_reports_stagnation_for_increasing_objective() {
        let r = brent_line_search(|t| Ok(t), 0.0, 1.0, 1e-4, 50).unwrap();
        assert_eq!(r.tau, 0.0);
    }

    #[test]
    fn brent_returns_endpoint_for_decreasing_objective() {
        let r = brent_line_search(|t| Ok(-t), 0.0, 1.0, 1e-4, 50).unwrap();
        assert_eq!(r.tau, 1.0);
        assert!(r.evaluations <= 50);
    }

    #[test]
    fn config_validation() {
        assert!(OptimConfig::default().validate().is_ok());
        assert!(OptimConfig { eps_j: 0.0, ..OptimConfig::default() }.validate().is_err());
        assert!(OptimConfig { alpha: 1.0, l0: 0.0, ..OptimConfig::default() }.validate().is_err());
    }
}
