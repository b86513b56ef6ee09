//! Single-layer potential `u_h(x) = −(1/2π) ∮ ln|x − x_C| μ ds` on a
//! contour equispaced in arc length, and its Nyström discretization.
//!
//! The self-interaction uses the logarithmic kernel split into a smooth
//! ratio part (trapezoid rule) and a `ln(4 sin²((t − t')/2))` part
//! integrated exactly against the trigonometric interpolant of the density.

use crate::error::{argument, geometry, Result};
use crate::fourier::{self, TrigSeries};
use crate::geometry::{Contour, ContourFunction, Point};
use crate::spectral::ChebGrid;
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Targets closer than this to the contour are rejected by
/// [`eval_single_layer`].
pub const ON_CONTOUR_DISTANCE: f64 = 1e-8;

/// Largest oversampling factor used for targets close to the contour.
const MAX_OVERSAMPLING: usize = 256;

/// Targets closer than this many node spacings get an oversampled rule.
const NEAR_FIELD_RATIO: f64 = 5.0;

/// Density samples `μ_l` at the contour nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerDensity {
    pub values: Vec<f64>,
}

impl LayerDensity {
    pub fn new(values: Vec<f64>) -> Self {
        LayerDensity { values }
    }

    pub fn constant(m: usize, value: f64) -> Self {
        LayerDensity { values: vec![value; m] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_density(contour: &Contour, mu: &LayerDensity) -> Result<()> {
    if mu.len() != contour.len() {
        return Err(argument(format!("density has {} samples for a contour of {} nodes", mu.len(), contour.len())));
    }
    Ok(())
}

fn log_sum(nodes: &[Point], weights: &[f64], x: Point) -> f64 {
    nodes
        .iter()
        .zip(weights)
        .map(|(p, w)| 0.5 * ((x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2)).ln() * w)
        .sum::<f64>()
        * (-1.0 / (2.0 * PI))
}

/// Trapezoid-rule single-layer potential at points off the contour.
pub fn eval_single_layer(contour: &Contour, mu: &LayerDensity, points: &[Point]) -> Result<Vec<f64>> {
    check_density(contour, mu)?;
    let h = contour.arc_step();
    let weights: Vec<f64> = mu.values.iter().map(|m| m * h).collect();
    points
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let d = contour.distance_to(x);
            if d <= ON_CONTOUR_DISTANCE {
                return Err(argument(format!(
                    "point {k} at ({}, {}) lies on the contour (distance {d:e}); use the trace operators",
                    x[0], x[1]
                )));
            }
            Ok(log_sum(contour.points(), &weights, x))
        })
        .collect()
}

/// Single-layer evaluation that stays accurate close to the contour by
/// evaluating the trapezoid rule on a spectrally oversampled copy of the
/// curve and density.
pub struct LayerEvaluator<'a> {
    contour: &'a Contour,
    xs: Vec<f64>,
    ys: Vec<f64>,
    mu: Vec<f64>,
    base_weights: Vec<f64>,
    levels: Vec<OnceLock<(Vec<Point>, Vec<f64>)>>,
    trace: TrigSeries,
}

impl<'a> LayerEvaluator<'a> {
    /// `trace` holds the on-contour values of the potential, used for
    /// targets that coincide with the curve.
    pub fn new(contour: &'a Contour, mu: &LayerDensity, trace: &[f64]) -> Result<LayerEvaluator<'a>> {
        check_density(contour, mu)?;
        if trace.len() != contour.len() {
            return Err(argument("trace has the wrong number of samples"));
        }
        let h = contour.arc_step();
        let base_weights = mu.values.iter().map(|v| v * h).collect();
        let levels = (0..MAX_OVERSAMPLING.trailing_zeros()).map(|_| OnceLock::new()).collect();
        Ok(LayerEvaluator {
            contour,
            xs: contour.xs(),
            ys: contour.ys(),
            mu: mu.values.clone(),
            base_weights,
            levels,
            trace: TrigSeries::new(trace),
        })
    }

    // nodes and weights oversampled by 2^(level + 1)
    fn level(&self, level: usize) -> &(Vec<Point>, Vec<f64>) {
        self.levels[level].get_or_init(|| {
            let mf = self.xs.len() << (level + 1);
            let fx = fourier::upsample(&self.xs, mf);
            let fy = fourier::upsample(&self.ys, mf);
            let fmu = fourier::upsample(&self.mu, mf);
            let dx = fourier::derivative(&fx, 1);
            let dy = fourier::derivative(&fy, 1);
            let dt = 2.0 * PI / mf as f64;
            let pts = fx.iter().zip(&fy).map(|(a, b)| [*a, *b]).collect();
            let w = (0..mf).map(|j| fmu[j] * dx[j].hypot(dy[j]) * dt).collect();
            (pts, w)
        })
    }

    pub fn eval(&self, x: Point) -> f64 {
        let h = self.contour.arc_step();
        let (d, t_near) = self.nearest(x);
        if d < 1e-12 {
            return self.trace.eval(t_near);
        }
        // trapezoid error decays like exp(−2π d / h_eff)
        let needed = NEAR_FIELD_RATIO * h / d;
        if needed <= 1.0 {
            return log_sum(self.contour.points(), &self.base_weights, x);
        }
        let level = (needed.log2().ceil() as usize).clamp(1, self.levels.len()) - 1;
        let (pts, w) = self.level(level);
        log_sum(pts, w, x)
    }

    pub fn eval_many(&self, points: &[Point]) -> Vec<f64> {
        points.iter().map(|&p| self.eval(p)).collect()
    }

    // polyline distance and the parameter of the closest point
    fn nearest(&self, p: Point) -> (f64, f64) {
        let pts = self.contour.points();
        let m = pts.len();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..m {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
            let len2 = ex * ex + ey * ey;
            let s = if len2 > 0.0 { (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
            let (rx, ry) = (p[0] - a[0] - s * ex, p[1] - a[1] - s * ey);
            let d2 = rx * rx + ry * ry;
            if d2 < best.0 {
                best = (d2, 2.0 * PI * (i as f64 + s) / m as f64);
            }
        }
        (best.0.sqrt(), best.1)
    }
}

/// `R_j^M` as a function of `t − t_j`.
pub fn log_sin_weight(m: usize, delta: f64) -> f64 {
    let half = m / 2;
    let mut acc = 0.0;
    for k in 1..half {
        acc += (k as f64 * delta).cos() / k as f64;
    }
    acc += (half as f64 * delta).cos() / m as f64;
    -2.0 / m as f64 * acc
}

/// Contour and boundary operators of the Nyström discretization.
#[derive(Debug, Clone)]
pub struct NystromOperators {
    /// Smooth (ratio) part of the on-contour single-layer operator.
    pub k1: DMatrix<f64>,
    /// Log-sine part, integrated exactly against the trigonometric interpolant.
    pub k2: DMatrix<f64>,
    /// Outward normal derivative of `u_h` at the boundary nodes, one row per
    /// entry of `boundary_index`.
    pub b_boundary: DMatrix<f64>,
    pub boundary_index: Vec<usize>,
    pub grid_size: usize,
    pub contour_len: usize,
    pub contour_length: f64,
}

impl NystromOperators {
    /// `K1 + K2`, the map from density to on-contour potential.
    pub fn single_layer_matrix(&self) -> DMatrix<f64> {
        &self.k1 + &self.k2
    }

    /// Dense `N² × M` form of `B` (interior rows are zero).
    pub fn b_full(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.grid_size, self.contour_len);
        for (r, &idx) in self.boundary_index.iter().enumerate() {
            b.row_mut(idx).copy_from(&self.b_boundary.row(r));
        }
        b
    }

    /// Applies `B` to a density, returning a full grid vector.
    pub fn apply_b(&self, mu: &[f64]) -> Vec<f64> {
        let vals = &self.b_boundary * nalgebra::DVector::from_column_slice(mu);
        let mut out = vec![0.0; self.grid_size];
        for (r, &idx) in self.boundary_index.iter().enumerate() {
            out[idx] = vals[r];
        }
        out
    }
}

/// Assembles `K1`, `K2` and `B` for a contour equispaced in arc length.
pub fn build_nystrom(contour: &Contour, grid: &ChebGrid) -> Result<NystromOperators> {
    if !contour.points().iter().all(|p| p[0].abs() < 1.0 && p[1].abs() < 1.0) {
        return Err(geometry("contour touches or leaves the domain boundary"));
    }
    let m = contour.len();
    let length = contour.length();
    let pts = contour.points();
    let dt = 2.0 * PI / m as f64;
    let c1 = -length / (2.0 * PI * m as f64);
    let k1 = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            c1 * (length / (2.0 * PI)).ln()
        } else {
            let chord = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            let s = (2.0 * ((i as f64 - j as f64) * dt / 2.0).sin()).abs();
            c1 * (chord / s).ln()
        }
    });
    let weights: Vec<f64> = (0..m).map(|d| log_sin_weight(m, d as f64 * dt)).collect();
    let k2 = DMatrix::from_fn(m, m, |i, j| -length / (4.0 * PI) * weights[(i + m - j) % m]);

    let boundary_index = grid.boundary_index();
    let h = contour.arc_step();
    let b_boundary = DMatrix::from_fn(boundary_index.len(), m, |r, j| {
        let idx = boundary_index[r];
        let (i, jj) = (idx / grid.n(), idx % grid.n());
        let b = grid.point(idx);
        let nb = grid.boundary_normal(i, jj);
        let (rx, ry) = (b[0] - pts[j][0], b[1] - pts[j][1]);
        -h / (2.0 * PI) * (rx * nb[0] + ry * nb[1]) / (rx * rx + ry * ry)
    });
    Ok(NystromOperators {
        k1,
        k2,
        b_boundary,
        boundary_index,
        grid_size: grid.size(),
        contour_len: m,
        contour_length: length,
    })
}

/// One-sided normal derivatives of `u_h` on the contour: side 1 is the
/// region enclosed by the contour, side 2 the region the normal points into.
pub fn trace_normal_derivatives(contour: &Contour, mu: &LayerDensity) -> Result<(ContourFunction, ContourFunction)> {
    check_density(contour, mu)?;
    let avg = double_layer_adjoint(contour, &mu.values);
    let length = contour.length();
    let side1 = avg.iter().zip(&mu.values).map(|(a, m)| a + 0.5 * m).collect();
    let side2 = avg.iter().zip(&mu.values).map(|(a, m)| a - 0.5 * m).collect();
    Ok((ContourFunction::new(side1, length), ContourFunction::new(side2, length)))
}

/// `−(1/2π) ∮ ⟨n(x), x − x'⟩ / |x − x'|² μ(x') ds'` at every node, with the
/// bounded diagonal limit `κ/2`.
pub fn double_layer_adjoint(contour: &Contour, mu: &[f64]) -> Vec<f64> {
    let m = contour.len();
    let pts = contour.points();
    let normals = contour.normals();
    let kappa = contour.curvature().values;
    let h = contour.arc_step();
    (0..m)
        .map(|i| {
            let mut acc = 0.5 * kappa[i] * mu[i];
            for j in 0..m {
                if j != i {
                    let (rx, ry) = (pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
                    acc += (normals[i][0] * rx + normals[i][1] * ry) / (rx * rx + ry * ry) * mu[j];
                }
            }
            -h / (2.0 * PI) * acc
        })
        .collect()
}
