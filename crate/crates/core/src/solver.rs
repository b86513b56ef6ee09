//! Coupled direct and adjoint problems.
//!
//! Unknowns are the particular field `U` on the Chebyshev grid and the
//! layer density `μ` on the contour:
//!
//! ```text
//! [ G        B              ] [U]   [f]
//! [ (γ/k)P   I + (γ/k)(K1+K2)] [μ] = [g]
//! ```
//!
//! `G` is singular on constants, so the system is solved through the
//! regularized grid operator `G + a bᵀ` of [`NeumannPoisson`]: a Schur
//! complement on the contour unknowns followed by a Sherman–Morrison
//! correction that removes the regularization again.

use crate::error::{argument, numerical, Result};
use crate::geometry::{Contour, ContourFunction};
use crate::poisson::NeumannPoisson;
use crate::potential::{build_nystrom, trace_normal_derivatives, LayerDensity, LayerEvaluator, NystromOperators};
use crate::presets::FieldSpec;
use crate::spectral::{ChebGrid, GridField, Rect};
use nalgebra::{DMatrix, DVector};

/// Largest accepted 1-norm condition number of the contour Schur complement.
pub const MAX_CONDITION: f64 = 1e12;

/// Normwise backward error `‖𝔐z − r‖∞ / (‖𝔐‖∞‖z‖∞ + ‖r‖∞)` above which a
/// solve is reported as failed.
pub const MAX_BACKWARD_ERROR: f64 = 1e-12;

/// Physical constants and data of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicsConfig {
    pub k: f64,
    pub gamma: f64,
    pub u0: f64,
    pub q: FieldSpec,
    pub target: FieldSpec,
    pub region: Rect,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            k: 1.0,
            gamma: 1.0,
            u0: 10.0,
            q: FieldSpec::Constant(0.0),
            target: FieldSpec::Constant(10.0),
            region: Rect::OMEGA,
        }
    }
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(argument(format!("conductivity k must be positive, got {}", self.k)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(argument(format!("heat-transfer coefficient gamma must be positive, got {}", self.gamma)));
        }
        if !self.u0.is_finite() {
            return Err(argument("reference temperature u0 must be finite"));
        }
        if !self.region.is_within_omega() {
            return Err(argument(format!("target region {:?} is not inside [-1, 1]²", self.region)));
        }
        Ok(())
    }
}

/// Grid-dependent data shared by every contour: the Poisson solver and the
/// responses `Z = (G + a bᵀ)⁻¹ E_b` to unit boundary sources.
pub struct Discretization {
    grid: ChebGrid,
    poisson: NeumannPoisson,
    boundary: Vec<usize>,
    z: DMatrix<f64>,
    reg_a: Vec<f64>,
    reg_b: Vec<f64>,
    grid_norm: f64,
}

impl Discretization {
    pub fn new(n: usize) -> Result<Discretization> {
        let grid = ChebGrid::new(n)?;
        let poisson = NeumannPoisson::new(&grid)?;
        let boundary = grid.boundary_index();
        let size = grid.size();
        let mut z = DMatrix::zeros(size, boundary.len());
        let mut unit = vec![0.0; size];
        for (c, &idx) in boundary.iter().enumerate() {
            unit[idx] = 1.0;
            z.column_mut(c).copy_from_slice(&poisson.solve(&unit));
            unit[idx] = 0.0;
        }
        let (reg_a, reg_b) = poisson.regularization();
        let row = |d: &DMatrix<f64>, i: usize| d.row(i).iter().map(|v| v.abs()).sum::<f64>();
        let grid_norm = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| match (i == 0 || i == n - 1, j == 0 || j == n - 1) {
                (false, false) => row(grid.d2(), i) + row(grid.d2(), j),
                _ => row(grid.d1(), i).max(row(grid.d1(), j)),
            })
            .fold(0.0, f64::max);
        Ok(Discretization { grid, poisson, boundary, z, reg_a, reg_b, grid_norm })
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.grid
    }

    pub fn poisson(&self) -> &NeumannPoisson {
        &self.poisson
    }
}

/// Diagnostics of one block solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    /// `‖𝔐z − r‖∞ / ‖r‖∞` (absolute when `r = 0`).
    pub relative_residual: f64,
    /// `‖𝔐z − r‖∞ / (‖𝔐‖∞‖z‖∞ + ‖r‖∞)`, with `‖𝔐‖∞` bounded row by row.
    pub backward_error: f64,
    /// 1-norm condition number of the contour Schur complement.
    pub condition: f64,
}

/// The block operator factored for one contour.
pub struct CoupledSystem<'a> {
    disc: &'a Discretization,
    physics: PhysicsConfig,
    contour: Contour,
    ops: NystromOperators,
    interp: DMatrix<f64>,
    single_layer: DMatrix<f64>,
    schur: nalgebra::linalg::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    sm_w: (Vec<f64>, Vec<f64>),
    sm_denominator: f64,
    condition: f64,
    norm: f64,
}

impl<'a> CoupledSystem<'a> {
    pub fn new(disc: &'a Discretization, physics: &PhysicsConfig, contour: &Contour) -> Result<CoupledSystem<'a>> {
        physics.validate()?;
        let ops = build_nystrom(contour, &disc.grid)?;
        Self::with_operators(disc, physics, contour, ops)
    }

    /// Factors the system for operators already built for `contour`.
    pub fn with_operators(
        disc: &'a Discretization,
        physics: &PhysicsConfig,
        contour: &Contour,
        ops: NystromOperators,
    ) -> Result<CoupledSystem<'a>> {
        physics.validate()?;
        if ops.contour_len != contour.len() || ops.grid_size != disc.grid.size() {
            return Err(argument("Nyström operators were built for a different contour or grid"));
        }
        let gk = physics.gamma / physics.k;
        let interp = disc.grid.interp_matrix(contour.points())?.to_dense();
        let single_layer = ops.single_layer_matrix();
        let m = contour.len();
        let pz = &interp * &disc.z;
        let mut s = DMatrix::identity(m, m) + &single_layer * gk;
        s -= (pz * &ops.b_boundary) * gk;
        let norm1 = |a: &DMatrix<f64>| (0..a.ncols()).map(|c| a.column(c).abs().sum()).fold(0.0, f64::max);
        let s_norm = norm1(&s);
        let schur = s.lu();
        let inv = schur
            .try_inverse()
            .ok_or_else(|| numerical("contour Schur complement is singular"))?;
        let condition = s_norm * norm1(&inv);
        if !(condition <= MAX_CONDITION) {
            return Err(numerical(format!(
                "coupled system is ill-conditioned (condition estimate {condition:e} exceeds {MAX_CONDITION:e})"
            )));
        }
        let row_sum = |a: &DMatrix<f64>| (0..a.nrows()).map(|r| a.row(r).abs().sum()).fold(0.0, f64::max);
        let norm = (disc.grid_norm + row_sum(&ops.b_boundary)).max(1.0 + gk * (row_sum(&interp) + row_sum(&single_layer)));
        log::debug!("factored coupled system: N = {}, M = {m}, cond = {condition:.3e}", disc.grid.n());
        let mut sys = CoupledSystem {
            disc,
            physics: physics.clone(),
            contour: contour.clone(),
            ops,
            interp,
            single_layer,
            schur,
            sm_w: (Vec::new(), Vec::new()),
            sm_denominator: 1.0,
            condition,
            norm,
        };
        let (wu, wm) = sys.solve_regularized(&disc.reg_a, &vec![0.0; m]);
        let bw: f64 = disc.reg_b.iter().zip(&wu).map(|(a, b)| a * b).sum();
        sys.sm_denominator = 1.0 - bw;
        if sys.sm_denominator.abs() < 1e-12 {
            return Err(numerical("coupled system is singular on constants"));
        }
        sys.sm_w = (wu, wm);
        Ok(sys)
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn operators(&self) -> &NystromOperators {
        &self.ops
    }

    pub fn physics(&self) -> &PhysicsConfig {
        &self.physics
    }

    pub fn grid(&self) -> &ChebGrid {
        &self.disc.grid
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn gk(&self) -> f64 {
        self.physics.gamma / self.physics.k
    }

    // solves the system with G replaced by G + a bᵀ
    fn solve_regularized(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gk = self.gk();
        let y = DVector::from_vec(self.disc.poisson.solve(f));
        let rhs = DVector::from_column_slice(g) - (&self.interp * &y) * gk;
        let mu = self.schur.solve(&rhs).expect("Schur complement was checked at factorization");
        let u = y - &self.disc.z * (&self.ops.b_boundary * &mu);
        (u.as_slice().to_vec(), mu.as_slice().to_vec())
    }

    fn solve_once(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut u, mut mu) = self.solve_regularized(f, g);
        let bz: f64 = self.disc.reg_b.iter().zip(&u).map(|(a, b)| a * b).sum();
        let c = bz / self.sm_denominator;
        u.iter_mut().zip(&self.sm_w.0).for_each(|(x, w)| *x += c * w);
        mu.iter_mut().zip(&self.sm_w.1).for_each(|(x, w)| *x += c * w);
        (u, mu)
    }

    /// Applies the unregularized block operator.
    pub fn apply(&self, u: &[f64], mu: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gk = self.gk();
        let mut top = self.disc.poisson.apply(u);
        let bmu = self.ops.b_boundary.clone() * DVector::from_column_slice(mu);
        for (r, &idx) in self.disc.boundary.iter().enumerate() {
            top[idx] += bmu[r];
        }
        let ud = DVector::from_column_slice(u);
        let md = DVector::from_column_slice(mu);
        let bottom = &md + (&self.interp * ud + &self.single_layer * &md) * gk;
        (top, bottom.as_slice().to_vec())
    }

    /// Solves the block system for right-hand side `(f, g)` with one step
    /// of iterative refinement when the first residual is not small.
    pub fn solve_block(&self, f: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>, SolveDiagnostics)> {
        if f.len() != self.disc.grid.size() || g.len() != self.contour.len() {
            return Err(argument("right-hand side has the wrong size"));
        }
        let (mut u, mut mu) = self.solve_once(f, g);
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let scale = max_abs(f).max(max_abs(g));
        let mut res = self.residual(&u, &mu, f, g);
        let mut r_norm = max_abs(&res.0).max(max_abs(&res.1));
        if r_norm > 1e-13 * scale {
            let (du, dmu) = self.solve_once(&res.0, &res.1);
            let u2: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a - b).collect();
            let mu2: Vec<f64> = mu.iter().zip(&dmu).map(|(a, b)| a - b).collect();
            let res2 = self.residual(&u2, &mu2, f, g);
            let r2 = max_abs(&res2.0).max(max_abs(&res2.1));
            if r2 < r_norm {
                (u, mu, res, r_norm) = (u2, mu2, res2, r2);
            }
        }
        drop(res);
        let z_norm = max_abs(&u).max(max_abs(&mu));
        let denom = self.norm * z_norm + scale;
        let diagnostics = SolveDiagnostics {
            relative_residual: if scale > 0.0 { r_norm / scale } else { r_norm },
            backward_error: if denom > 0.0 { r_norm / denom } else { 0.0 },
            condition: self.condition,
        };
        if !(diagnostics.backward_error < MAX_BACKWARD_ERROR) {
            return Err(numerical(format!(
                "coupled solve backward error {:e} exceeds {MAX_BACKWARD_ERROR:e} (relative residual {:e}, condition estimate {:e})",
                diagnostics.backward_error, diagnostics.relative_residual, self.condition
            )));
        }
        Ok((u, mu, diagnostics))
    }

    fn residual(&self, u: &[f64], mu: &[f64], f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (mut top, mut bottom) = self.apply(u, mu);
        top.iter_mut().zip(f).for_each(|(a, b)| *a -= b);
        bottom.iter_mut().zip(g).for_each(|(a, b)| *a -= b);
        (top, bottom)
    }

    /// Assembles the full solution (traces and total field) from the block
    /// unknowns.
    fn assemble(&self, u: Vec<f64>, mu: Vec<f64>, diagnostics: SolveDiagnostics) -> Result<CoupledSolution> {
        let grid = &self.disc.grid;
        let length = self.contour.length();
        let up = GridField { n: grid.n(), values: u };
        let density = LayerDensity::new(mu);
        let ud = DVector::from_column_slice(&up.values);
        let md = DVector::from_column_slice(&density.values);
        let trace_h = &self.single_layer * &md;
        let u_on_c: Vec<f64> = (&self.interp * ud + &trace_h).as_slice().to_vec();

        let (ux, uy) = grid.gradient(&up);
        let gx = grid.eval_polynomial(&ux, self.contour.points());
        let gy = grid.eval_polynomial(&uy, self.contour.points());
        let normals = self.contour.normals();
        let dn_up: Vec<f64> = normals.iter().enumerate().map(|(l, n)| gx[l] * n[0] + gy[l] * n[1]).collect();
        let (side1, side2) = trace_normal_derivatives(&self.contour, &density)?;
        let dn_u1 = dn_up.iter().zip(&side1.values).map(|(a, b)| a + b).collect();
        let dn_u2 = dn_up.iter().zip(&side2.values).map(|(a, b)| a + b).collect();

        let evaluator = LayerEvaluator::new(&self.contour, &density, trace_h.as_slice())?;
        let uh = evaluator.eval_many(&(0..grid.size()).map(|k| grid.point(k)).collect::<Vec<_>>());
        let total = up.values.iter().zip(&uh).map(|(a, b)| a + b).collect();

        Ok(CoupledSolution {
            contour: self.contour.clone(),
            up,
            mu: density,
            u_on_c: ContourFunction::new(u_on_c, length),
            uh_on_c: ContourFunction::new(trace_h.as_slice().to_vec(), length),
            dn_u1: ContourFunction::new(dn_u1, length),
            dn_u2: ContourFunction::new(dn_u2, length),
            u_grid: GridField { n: grid.n(), values: total },
            diagnostics,
        })
    }
}

/// Field and traces of a solved direct or adjoint problem.
#[derive(Debug, Clone)]
pub struct CoupledSolution {
    /// Contour the solution was computed for.
    pub contour: Contour,
    pub up: GridField,
    pub mu: LayerDensity,
    /// Temperature on the contour (continuous across it).
    pub u_on_c: ContourFunction,
    /// Single-layer part of `u_on_c`.
    pub uh_on_c: ContourFunction,
    /// Normal derivative from inside the contour.
    pub dn_u1: ContourFunction,
    /// Normal derivative from outside the contour.
    pub dn_u2: ContourFunction,
    /// Total temperature `u_p + u_h` at the grid nodes.
    pub u_grid: GridField,
    pub diagnostics: SolveDiagnostics,
}

impl CoupledSolution {
    /// Temperature at arbitrary points of the square: polynomial
    /// interpolant of `u_p` plus the single-layer potential.
    pub fn eval_points(&self, grid: &ChebGrid, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        if grid.n() != self.up.n {
            return Err(argument("grid does not match the solution"));
        }
        let up = grid.eval_polynomial(&self.up, points);
        let evaluator = LayerEvaluator::new(&self.contour, &self.mu, &self.uh_on_c.values)?;
        Ok(up.iter().zip(points).map(|(a, p)| a + evaluator.eval(*p)).collect())
    }

    /// `k(∂u/∂n|₂ − ∂u/∂n|₁) − γ(u − u_ref)` at every node.
    pub fn flux_jump_residual(&self, k: f64, gamma: f64, u_ref: f64) -> ContourFunction {
        let values = (0..self.u_on_c.len())
            .map(|l| k * (self.dn_u2.values[l] - self.dn_u1.values[l]) - gamma * (self.u_on_c.values[l] - u_ref))
            .collect();
        ContourFunction::new(values, self.u_on_c.length)
    }
}

/// Source term `q/k` on interior rows and zeros on boundary rows.
fn grid_rhs(grid: &ChebGrid, values: &[f64], k: f64) -> Vec<f64> {
    let n = grid.n();
    (0..grid.size())
        .map(|idx| if grid.is_boundary(idx / n, idx % n) { 0.0 } else { values[idx] / k })
        .collect()
}

/// Indicator of the target region on the grid: 1 at nodes strictly inside.
pub fn region_mask(grid: &ChebGrid, region: Rect) -> Vec<f64> {
    (0..grid.size())
        .map(|idx| {
            let p = grid.point(idx);
            if region.is_omega() || region.contains_strictly(p[0], p[1]) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Solves the direct problem on a factored system.
pub fn solve_direct(system: &CoupledSystem) -> Result<CoupledSolution> {
    let physics = system.physics();
    let grid = system.grid();
    let q = physics.q.sample(grid)?;
    let f = grid_rhs(grid, &q.values, physics.k);
    let g = vec![system.gk() * physics.u0; system.contour().len()];
    let (u, mu, diag) = system.solve_block(&f, &g)?;
    system.assemble(u, mu, diag)
}

/// Solves the adjoint problem forced by `(u − ū)χ_A`.
pub fn solve_adjoint(system: &CoupledSystem, direct: &CoupledSolution) -> Result<CoupledSolution> {
    if direct.contour.points() != system.contour().points() {
        return Err(argument("direct solution belongs to a different contour"));
    }
    let physics = system.physics();
    let grid = system.grid();
    let target = physics.target.sample(grid)?;
    let chi = region_mask(grid, physics.region);
    let forcing: Vec<f64> = (0..grid.size()).map(|i| (direct.u_grid.values[i] - target.values[i]) * chi[i]).collect();
    let f = grid_rhs(grid, &forcing, physics.k);
    let g = vec![0.0; system.contour().len()];
    let (u, mu, diag) = system.solve_block(&f, &g)?;
    system.assemble(u, mu, diag)
}
