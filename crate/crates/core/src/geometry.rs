//! Closed contours sampled at uniformly spaced parameter values, with
//! spectrally computed differential geometry.
//!
//! The working parameter is `t ∈ [0, 2π)` with node `l` at `t_l = 2πl/M`.
//! Once a contour is resampled to equal arc length, `t = 2πs/L` and all
//! quantities below are functions of arc length as well.

use crate::error::{argument, geometry, numerical, Result};
use crate::fourier::{self, TrigSeries};
use std::f64::consts::PI;

pub type Point = [f64; 2];

/// Tolerance for the Newton solve that places nodes at equal arc length.
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;

/// A simple closed planar curve represented by `M` ordered nodes.
#[derive(Debug, Clone)]
pub struct Contour {
    points: Vec<Point>,
    // derivatives of the coordinates with respect to the uniform parameter
    dx: Vec<f64>,
    dy: Vec<f64>,
    ddx: Vec<f64>,
    ddy: Vec<f64>,
    length: f64,
}

/// Scalar samples attached to the nodes of a contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourFunction {
    pub values: Vec<f64>,
    pub length: f64,
}

impl ContourFunction {
    pub fn new(values: Vec<f64>, length: f64) -> Self {
        ContourFunction { values, length }
    }

    pub fn zeros(m: usize, length: f64) -> Self {
        ContourFunction { values: vec![0.0; m], length }
    }

    pub fn from_fn(contour: &Contour, f: impl Fn(usize) -> f64) -> Self {
        ContourFunction {
            values: (0..contour.len()).map(f).collect(),
            length: contour.length(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Spacing of the equispaced arc-length nodes.
    pub fn arc_step(&self) -> f64 {
        self.length / self.values.len() as f64
    }

    /// Trapezoid rule for `∮ f ds` on equispaced nodes.
    pub fn integral(&self) -> f64 {
        self.arc_step() * self.values.iter().sum::<f64>()
    }

    /// `∮ f g ds` by the trapezoid rule.
    pub fn inner_l2(&self, other: &ContourFunction) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.arc_step() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `∮ f g + ℓ² f' g' ds` with spectral arc-length derivatives.
    pub fn inner_h1(&self, other: &ContourFunction, ell: f64) -> f64 {
        let base = self.inner_l2(other);
        if ell == 0.0 {
            return base;
        }
        let da = self.derivative_s(1);
        let db = other.derivative_s(1);
        base + ell * ell * da.inner_l2(&db)
    }

    pub fn norm_l2(&self) -> f64 {
        self.inner_l2(self).sqrt()
    }

    /// Spectral derivative of order `order` with respect to arc length.
    pub fn derivative_s(&self, order: u32) -> ContourFunction {
        let scale = (2.0 * PI / self.length).powi(order as i32);
        let values = fourier::derivative(&self.values, order)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        ContourFunction { values, length: self.length }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn signed_area(points: &[Point]) -> f64 {
    let m = points.len();
    0.5 * (0..m)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % m];
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Index pair of the first two non-adjacent polyline edges that cross.
pub fn find_self_intersection(points: &[Point]) -> Option<(usize, usize)> {
    let m = points.len();
    for i in 0..m {
        let (a, b) = (points[i], points[(i + 1) % m]);
        for j in (i + 2)..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_intersect(a, b, points[j], points[(j + 1) % m]) {
                return Some((i, j));
            }
        }
    }
    None
}

impl Contour {
    /// Builds a contour, reversing the node order if needed so that it is
    /// counter-clockwise.
    pub fn new(mut points: Vec<Point>) -> Result<Contour> {
        Self::validate(&points)?;
        if signed_area(&points) < 0.0 {
            points.reverse();
            // keep the first node as the origin of the parameter
            points.rotate_right(1);
        }
        Ok(Self::build(points))
    }

    /// Builds a contour keeping the given orientation, so that the sign
    /// conventions of clockwise curves can be inspected.
    pub fn new_preserving_orientation(points: Vec<Point>) -> Result<Contour> {
        Self::validate(&points)?;
        Ok(Self::build(points))
    }

    /// Samples `x(t)` at `m_in` uniform parameters and resamples the result
    /// to `m` nodes equispaced in arc length.
    pub fn from_parametric(f: impl Fn(f64) -> Point, m_in: usize, m: usize) -> Result<Contour> {
        let points = (0..m_in).map(|j| f(fourier::node_parameter(j, m_in))).collect();
        resample_equal_arclength(&Contour::new(points)?, m)
    }

    fn validate(points: &[Point]) -> Result<()> {
        let m = points.len();
        if m < 8 {
            return Err(argument(format!("a contour needs at least 8 nodes, got {m}")));
        }
        if m % 2 != 0 {
            return Err(argument(format!("the node count must be even, got {m}")));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(geometry("contour has non-finite coordinates"));
        }
        if let Some((i, j)) = find_self_intersection(points) {
            return Err(geometry(format!("contour self-intersects (edges {i} and {j})")));
        }
        Ok(())
    }

    fn build(points: Vec<Point>) -> Contour {
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let dx = fourier::derivative(&xs, 1);
        let dy = fourier::derivative(&ys, 1);
        let ddx = fourier::derivative(&xs, 2);
        let ddy = fourier::derivative(&ys, 2);
        let m = points.len() as f64;
        let length = 2.0 * PI / m * dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).sum::<f64>();
        Contour { points, dx, dy, ddx, ddy, length }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[0]).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p[1]).collect()
    }

    /// Total length `∮ |x'(t)| dt`, computed spectrally.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn arc_step(&self) -> f64 {
        self.length / self.len() as f64
    }

    /// Arc-length coordinates `s_l = lL/M` of the nodes.
    pub fn arc_positions(&self) -> Vec<f64> {
        (0..self.len()).map(|l| l as f64 * self.arc_step()).collect()
    }

    /// Parametric speed `|x'(t)|` at the nodes.
    pub fn speeds(&self) -> Vec<f64> {
        self.dx.iter().zip(&self.dy).map(|(a, b)| a.hypot(*b)).collect()
    }

    /// Largest relative deviation of the nodal speed from `L/2π`.
    pub fn arclength_nonuniformity(&self) -> f64 {
        let mean = self.length / (2.0 * PI);
        self.speeds().iter().map(|s| (s - mean).abs() / mean).fold(0.0, f64::max)
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.points)
    }

    pub fn is_counter_clockwise(&self) -> bool {
        self.signed_area() > 0.0
    }

    pub fn centroid(&self) -> Point {
        let m = self.points.len();
        let area = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..m {
            let a = self.points[i];
            let b = self.points[(i + 1) % m];
            let cross = a[0] * b[1] - b[0] * a[1];
            cx += (a[0] + b[0]) * cross;
            cy += (a[1] + b[1]) * cross;
        }
        [cx / (6.0 * area), cy / (6.0 * area)]
    }

    /// Unit tangents along the direction of increasing parameter.
    pub fn tangents(&self) -> Vec<Point> {
        self.dx
            .iter()
            .zip(&self.dy)
            .map(|(a, b)| {
                let s = a.hypot(*b);
                [a / s, b / s]
            })
            .collect()
    }

    /// Unit normals obtained by rotating the tangent clockwise; outward for a
    /// counter-clockwise contour.
    pub fn normals(&self) -> Vec<Point> {
        self.tangents().into_iter().map(|t| [t[1], -t[0]]).collect()
    }

    /// Signed curvature `(x'y'' − y'x'')/|x'|³`; positive on a
    /// counter-clockwise circle.
    pub fn curvature(&self) -> ContourFunction {
        let values = (0..self.len())
            .map(|i| {
                let (a, b) = (self.dx[i], self.dy[i]);
                let s = a.hypot(b);
                (a * self.ddy[i] - b * self.ddx[i]) / (s * s * s)
            })
            .collect();
        ContourFunction { values, length: self.length }
    }

    /// True iff every node lies in `[−1 + margin, 1 − margin]²`.
    pub fn contains_in_domain(&self, margin: f64) -> bool {
        let lim = 1.0 - margin;
        self.points.iter().all(|p| p[0].abs() <= lim && p[1].abs() <= lim)
    }

    pub fn is_simple(&self) -> bool {
        find_self_intersection(&self.points).is_none()
    }

    /// Moves node `l` by `shift[l]` along its normal.
    pub fn displaced_along_normals(&self, shift: &[f64]) -> Result<Contour> {
        if shift.len() != self.len() {
            return Err(argument(format!(
                "normal displacement has {} samples for a contour of {} nodes",
                shift.len(),
                self.len()
            )));
        }
        let points = self
            .points
            .iter()
            .zip(self.normals())
            .zip(shift)
            .map(|((p, n), d)| [p[0] + d * n[0], p[1] + d * n[1]])
            .collect();
        Contour::new_preserving_orientation(points)
    }

    /// Same nodes in the opposite order, starting from the same node.
    pub fn reversed(&self) -> Contour {
        let mut points = self.points.clone();
        points.reverse();
        points.rotate_right(1);
        Self::build(points)
    }

    /// Minimum distance from `p` to the polyline through the nodes.
    pub fn distance_to(&self, p: Point) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let a = self.points[i];
                let b = self.points[(i + 1) % m];
                let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                let len2 = ex * ex + ey * ey;
                let t = if len2 > 0.0 { (((p[0] - a[0]) * ex + (p[1] - a[1]) * ey) / len2).clamp(0.0, 1.0) } else { 0.0 };
                (p[0] - a[0] - t * ex).hypot(p[1] - a[1] - t * ey)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Trigonometric interpolants of both coordinates.
    pub fn coordinate_series(&self) -> (TrigSeries, TrigSeries) {
        (TrigSeries::new(&self.xs()), TrigSeries::new(&self.ys()))
    }
}

/// Re-collocates a contour at `m` nodes equispaced in arc length.
///
/// The coordinates are interpolated by trigonometric series in the current
/// parameter, the cumulative arc length of that interpolant is evaluated
/// spectrally, and each new node parameter is located by Newton iteration.
/// The first node is kept in place.
pub fn resample_equal_arclength(contour: &Contour, m: usize) -> Result<Contour> {
    if m % 2 != 0 {
        return Err(argument(format!("resampling needs an even node count, got {m}")));
    }
    if m < 8 {
        return Err(argument(format!("resampling needs at least 8 nodes, got {m}")));
    }
    let m_in = contour.len();
    let fine = (4 * m_in).max(4 * m).max(256);
    let dx = fourier::upsample(&contour.dx, fine);
    let dy = fourier::upsample(&contour.dy, fine);
    let speed: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).collect();
    let speed = TrigSeries::new(&speed).truncate(1e-17);
    let length = 2.0 * PI * speed.mean();
    let cumulative = |t: f64| speed.mean() * t + speed.eval_periodic_antiderivative(t);

    let (xs, ys) = contour.coordinate_series();
    let mut points = Vec::with_capacity(m);
    points.push(contour.points[0]);
    for l in 1..m {
        let target = length * l as f64 / m as f64;
        let mut t = 2.0 * PI * l as f64 / m as f64;
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let step = (cumulative(t) - target) / speed.eval(t);
            t -= step;
            if step.abs() < NEWTON_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(numerical(format!("arc-length Newton iteration did not converge at node {l}")));
        }
        points.push([xs.eval(t), ys.eval(t)]);
    }
    if let Some((i, j)) = find_self_intersection(&points) {
        return Err(geometry(format!("resampled contour self-intersects (edges {i} and {j})")));
    }
    let out = Contour::build(points);
    debug_assert!(out.is_counter_clockwise() == contour.is_counter_clockwise());
    Ok(out)
}
