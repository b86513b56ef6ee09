//! Shape gradients assembled from direct and adjoint traces, their H¹
//! smoothing, and the formulas for a reference temperature that varies
//! linearly along the contour.

use crate::error::{argument, Result};
use crate::fourier;
use crate::geometry::{Contour, ContourFunction};
use crate::solver::{CoupledSolution, PhysicsConfig};
use std::f64::consts::PI;

/// An L² shape gradient together with its H¹ (smoothed) counterpart.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    pub l2: ContourFunction,
    pub h1: ContourFunction,
    pub smoothing_scale: f64,
}

impl ShapeGradient {
    pub fn new(l2: ContourFunction, ell: f64) -> ShapeGradient {
        let h1 = smooth_sobolev(&l2, ell, l2.length);
        ShapeGradient { l2, h1, smoothing_scale: ell }
    }

    /// Max-norm of `(1 − ℓ² d²/ds²) h1 − l2`.
    pub fn helmholtz_residual(&self) -> f64 {
        let d2 = self.h1.derivative_s(2);
        let ell2 = self.smoothing_scale * self.smoothing_scale;
        self.h1
            .values
            .iter()
            .zip(&d2.values)
            .zip(&self.l2.values)
            .map(|((h, d), g)| (h - ell2 * d - g).abs())
            .fold(0.0, f64::max)
    }
}

/// `−γ(u₁ − u₀)(κu*₁ + ∂u*₁/∂n) − γu*₁ ∂u₂/∂n + α(L − L₀)κ` at the nodes.
pub fn assemble_l2_gradient(
    direct: &CoupledSolution,
    adjoint: &CoupledSolution,
    contour: &Contour,
    physics: &PhysicsConfig,
    alpha: f64,
    l0: f64,
) -> Result<ContourFunction> {
    if direct.contour.points() != contour.points() || adjoint.contour.points() != contour.points() {
        return Err(argument("direct and adjoint traces must belong to the given contour"));
    }
    let kappa = contour.curvature();
    let gamma = physics.gamma;
    let length = contour.length();
    let penalty = if alpha > 0.0 { alpha * (length - l0) } else { 0.0 };
    let values = (0..contour.len())
        .map(|l| {
            let u = direct.u_on_c.values[l];
            let ua = adjoint.u_on_c.values[l];
            -gamma * (u - physics.u0) * (kappa.values[l] * ua + adjoint.dn_u1.values[l])
                - gamma * ua * direct.dn_u2.values[l]
                + penalty * kappa.values[l]
        })
        .collect();
    Ok(ContourFunction::new(values, length))
}

/// Solves `(1 − ℓ² d²/ds²) g = l2` on a periodic contour of length `length`.
pub fn smooth_sobolev(l2: &ContourFunction, ell: f64, length: f64) -> ContourFunction {
    if ell == 0.0 {
        return ContourFunction::new(l2.values.clone(), length);
    }
    let scale = ell * 2.0 * PI / length;
    let values = fourier::filter(&l2.values, |k| 1.0 / (1.0 + (scale * k as f64).powi(2)));
    ContourFunction::new(values, length)
}

/// Reference temperature rising linearly from `ta` at `s = 0` to `tb` at `s = L`.
pub fn eval_u0_profile(ta: f64, tb: f64, length: f64, s: &[f64]) -> ContourFunction {
    let values = s.iter().map(|&si| ta + (tb - ta) * si / length).collect();
    ContourFunction::new(values, length)
}

fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

// s' = 0 and s' = L are the same node, and H(s − s') jumps from 1 to 0
// between them; the trapezoid rule takes the midpoint value there
fn wrap(l: usize) -> f64 {
    if l == 0 {
        0.5
    } else {
        0.0
    }
}

fn node_positions(m: usize, length: f64) -> Vec<f64> {
    (0..m).map(|l| l as f64 * length / m as f64).collect()
}

/// Shape derivative of the linear reference profile in direction `ζ`:
/// `(T_b − T_a)/L · ∫₀ᴸ [H(s − s') − s/L] κ(s')ζ(s') ds'`.
pub fn shape_derivative_u0(ta: f64, tb: f64, length: f64, kappa: &ContourFunction, zeta: &ContourFunction) -> Result<ContourFunction> {
    let m = kappa.len();
    if zeta.len() != m {
        return Err(argument(format!("curvature has {m} samples but the perturbation has {}", zeta.len())));
    }
    let s = node_positions(m, length);
    let h = length / m as f64;
    let coef = (tb - ta) / length;
    let values = s
        .iter()
        .map(|&si| {
            coef * h
                * s.iter()
                    .enumerate()
                    .map(|(l, &sl)| (heaviside(si - sl) - wrap(l) - si / length) * kappa.values[l] * zeta.values[l])
                    .sum::<f64>()
        })
        .collect();
    Ok(ContourFunction::new(values, length))
}

/// Gradient contribution of the arc-length dependent reference profile:
/// `−γκ(s)(T_b − T_a)/L · ∫₀ᴸ [H(s' − s) − s'/L] u*(s') ds'`.
pub fn grad_u0_term(
    adjoint_trace: &ContourFunction,
    kappa: &ContourFunction,
    gamma: f64,
    ta: f64,
    tb: f64,
    length: f64,
) -> Result<ContourFunction> {
    let m = kappa.len();
    if adjoint_trace.len() != m {
        return Err(argument(format!("curvature has {m} samples but the adjoint trace has {}", adjoint_trace.len())));
    }
    let s = node_positions(m, length);
    let h = length / m as f64;
    let coef = (tb - ta) / length;
    let values = s
        .iter()
        .enumerate()
        .map(|(i, &si)| {
            let inner: f64 = s
                .iter()
                .enumerate()
                .map(|(l, &sl)| (heaviside(sl - si) - sl / length) * adjoint_trace.values[l])
                .sum::<f64>()
                * h;
            -gamma * kappa.values[i] * coef * inner
        })
        .collect();
    Ok(ContourFunction::new(values, length))
}
