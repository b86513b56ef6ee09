//! Chebyshev collocation on the square `Ω = [−1, 1]²`.
//!
//! Grid values are flattened lexicographically: the value at `(x_i, y_j)`
//! lives at index `i·N + j` (0-based).

use crate::error::{argument, Result};
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const OMEGA: Rect = Rect { x0: -1.0, x1: 1.0, y0: -1.0, y1: 1.0 };

    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Rect> {
        if !(x0 < x1 && y0 < y1) {
            return Err(argument(format!("degenerate rectangle [{x0},{x1}]x[{y0},{y1}]")));
        }
        Ok(Rect { x0, x1, y0, y1 })
    }

    pub fn is_within_omega(&self) -> bool {
        self.x0 >= -1.0 && self.x1 <= 1.0 && self.y0 >= -1.0 && self.y1 <= 1.0
    }

    pub fn is_omega(&self) -> bool {
        *self == Rect::OMEGA
    }

    /// Strict interior test.
    pub fn contains_strictly(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)]
    }
}

/// Natural cubic spline on fixed nodes, stored as the linear map from nodal
/// values to nodal second derivatives.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    nodes: Vec<f64>,
    second: DMatrix<f64>,
}

impl NaturalSpline {
    pub fn new(nodes: &[f64]) -> NaturalSpline {
        let n = nodes.len();
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        // tridiagonal system for the interior second derivatives
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DMatrix::<f64>::zeros(n, n);
        a[(0, 0)] = 1.0;
        a[(n - 1, n - 1)] = 1.0;
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1];
            a[(i, i)] = 2.0 * (h[i - 1] + h[i]);
            a[(i, i + 1)] = h[i];
            rhs[(i, i + 1)] = 6.0 / h[i];
            rhs[(i, i)] = -6.0 / h[i] - 6.0 / h[i - 1];
            rhs[(i, i - 1)] = 6.0 / h[i - 1];
        }
        let second = a.lu().solve(&rhs).expect("spline system is diagonally dominant");
        NaturalSpline { nodes: nodes.to_vec(), second }
    }

    /// Weights `w` such that the spline value at `x` is `Σ w_k y_k`.
    pub fn weights(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        let k = match self.nodes.iter().rposition(|&v| v <= x) {
            Some(k) if k >= n - 1 => n - 2,
            Some(k) => k,
            None => 0,
        };
        let h = self.nodes[k + 1] - self.nodes[k];
        let a = (self.nodes[k + 1] - x) / h;
        let b = (x - self.nodes[k]) / h;
        let ca = (a * a * a - a) * h * h / 6.0;
        let cb = (b * b * b - b) * h * h / 6.0;
        let mut w: Vec<f64> = (0..n).map(|c| ca * self.second[(k, c)] + cb * self.second[(k + 1, c)]).collect();
        w[k] += a;
        w[k + 1] += b;
        w
    }
}

/// Tensor Chebyshev–Gauss–Lobatto grid with collocation operators.
#[derive(Debug, Clone)]
pub struct ChebGrid {
    n: usize,
    nodes: Vec<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    cc_weights: Vec<f64>,
    spline: NaturalSpline,
}

/// Nodal values on a [`ChebGrid`], lexicographically ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(n: usize, values: Vec<f64>) -> Result<GridField> {
        if values.len() != n * n {
            return Err(argument(format!("grid field needs {} values, got {}", n * n, values.len())));
        }
        Ok(GridField { n, values })
    }

    pub fn zeros(n: usize) -> GridField {
        GridField { n, values: vec![0.0; n * n] }
    }

    pub fn from_fn(grid: &ChebGrid, f: impl Fn(f64, f64) -> f64) -> GridField {
        let n = grid.n();
        let mut values = Vec::with_capacity(n * n);
        for &x in grid.nodes() {
            for &y in grid.nodes() {
                values.push(f(x, y));
            }
        }
        GridField { n, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        GridField { n: self.n, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn clenshaw_curtis(n: usize) -> Vec<f64> {
    // n nodes, n - 1 intervals
    let m = n - 1;
    let mut w = vec![0.0; n];
    let theta = |i: usize| PI * i as f64 / m as f64;
    if m % 2 == 0 {
        w[0] = 1.0 / ((m * m) as f64 - 1.0);
        w[m] = w[0];
        for (i, wi) in w.iter_mut().enumerate().take(m).skip(1) {
            let mut v = 1.0;
            for k in 1..m / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(i)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= (m as f64 * theta(i)).cos() / ((m * m) as f64 - 1.0);
            *wi = 2.0 * v / m as f64;
        }
    } else {
        w[0] = 1.0 / (m * m) as f64;
        w[m] = w[0];
        for (i, wi) in w.iter_mut().enumerate().take(m).skip(1) {
            let mut v = 1.0;
            for k in 1..=(m - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(i)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            *wi = 2.0 * v / m as f64;
        }
    }
    w
}

/// Chebyshev–Gauss–Lobatto nodes in ascending order and the matching
/// first-derivative collocation matrix.
pub fn chebyshev_nodes_and_derivative(n: usize) -> (Vec<f64>, DMatrix<f64>) {
    let m = (n - 1) as f64;
    // sin form keeps the nodes exactly antisymmetric
    let x: Vec<f64> = (0..n).map(|i| ((2.0 * i as f64 - m) * PI / (2.0 * m)).sin()).collect();
    let c = |i: usize| if i == 0 || i == n - 1 { 2.0 } else { 1.0 };
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let diff = 2.0 * (PI * (i + j) as f64 / (2.0 * m)).sin() * (PI * (i as f64 - j as f64) / (2.0 * m)).sin();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / diff;
            }
        }
    }
    // negative-sum trick for the diagonal
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    (x, d)
}

impl ChebGrid {
    /// Minimum resolution accepted by [`ChebGrid::new`].
    pub const MIN_N: usize = 8;

    pub fn new(n: usize) -> Result<ChebGrid> {
        if n < Self::MIN_N {
            return Err(argument(format!("grid needs at least {} points per axis, got {n}", Self::MIN_N)));
        }
        Ok(Self::build(n))
    }

    /// Builds a grid without the production lower bound on `n`; used to
    /// inspect the collocation operators at tiny sizes.
    pub fn with_any_size(n: usize) -> Result<ChebGrid> {
        if n < 2 {
            return Err(argument("a Chebyshev grid needs at least 2 points"));
        }
        Ok(Self::build(n))
    }

    fn build(n: usize) -> ChebGrid {
        let (nodes, d1) = chebyshev_nodes_and_derivative(n);
        let d2 = &d1 * &d1;
        let cc_weights = clenshaw_curtis(n);
        let spline = NaturalSpline::new(&nodes);
        ChebGrid { n, nodes, d1, d2, cc_weights, spline }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.n * self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn cc_weights(&self) -> &[f64] {
        &self.cc_weights
    }

    pub fn spline(&self) -> &NaturalSpline {
        &self.spline
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.nodes[idx / self.n], self.nodes[idx % self.n]]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.n - 1 || j == self.n - 1
    }

    /// The `4N − 4` boundary indices in increasing order.
    pub fn boundary_index(&self) -> Vec<usize> {
        (0..self.size()).filter(|&k| self.is_boundary(k / self.n, k % self.n)).collect()
    }

    /// Outward normal used by the boundary row at `(i, j)`; corners use the
    /// average of the two face normals.
    pub fn boundary_normal(&self, i: usize, j: usize) -> [f64; 2] {
        let last = self.n - 1;
        let sx = if i == 0 { -1.0 } else if i == last { 1.0 } else { 0.0 };
        let sy = if j == 0 { -1.0 } else if j == last { 1.0 } else { 0.0 };
        if sx != 0.0 && sy != 0.0 {
            [0.5 * sx, 0.5 * sy]
        } else {
            [sx, sy]
        }
    }

    /// Values at `x` of the Lagrange polynomials through the Chebyshev
    /// nodes (barycentric form).
    pub fn lagrange_weights(&self, x: f64) -> Vec<f64> {
        let n = self.n;
        let mut w = vec![0.0; n];
        if let Some(k) = self.nodes.iter().position(|&xi| xi == x) {
            w[k] = 1.0;
            return w;
        }
        let mut total = 0.0;
        for (i, wi) in w.iter_mut().enumerate() {
            let half = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *wi = sign * half / (x - self.nodes[i]);
            total += *wi;
        }
        w.iter_mut().for_each(|v| *v /= total);
        w
    }

    /// Evaluates the tensor Chebyshev interpolant of `field` at `points`.
    pub fn eval_polynomial(&self, field: &GridField, points: &[[f64; 2]]) -> Vec<f64> {
        let n = self.n;
        points
            .iter()
            .map(|p| {
                let wx = self.lagrange_weights(p[0]);
                let wy = self.lagrange_weights(p[1]);
                (0..n)
                    .map(|i| wx[i] * field.values[i * n..(i + 1) * n].iter().zip(&wy).map(|(a, b)| a * b).sum::<f64>())
                    .sum()
            })
            .collect()
    }

    /// Spectral partial derivatives `(∂/∂x, ∂/∂y)` of a grid field.
    pub fn gradient(&self, field: &GridField) -> (GridField, GridField) {
        let n = self.n;
        let u = DMatrix::from_row_slice(n, n, &field.values);
        let ux = &self.d1 * &u;
        let uy = &u * self.d1.transpose();
        (to_field(&ux), to_field(&uy))
    }

    /// Collocation Laplacian with Neumann rows on the boundary.
    pub fn neumann_laplacian(&self) -> NeumannLaplacian<'_> {
        NeumannLaplacian { grid: self }
    }

    /// Tensor spline interpolation operator onto `targets`.
    pub fn interp_matrix(&self, targets: &[[f64; 2]]) -> Result<InterpOperator> {
        let mut wx = Vec::with_capacity(targets.len());
        let mut wy = Vec::with_capacity(targets.len());
        for (r, p) in targets.iter().enumerate() {
            if !(p[0] > -1.0 && p[0] < 1.0 && p[1] > -1.0 && p[1] < 1.0) {
                return Err(argument(format!("interpolation target {r} at ({}, {}) is not inside the domain", p[0], p[1])));
            }
            wx.push(self.spline.weights(p[0]));
            wy.push(self.spline.weights(p[1]));
        }
        Ok(InterpOperator { n: self.n, wx, wy })
    }

    /// Clenshaw–Curtis tensor quadrature of `field` over `region`. On a
    /// proper subregion the field is first spline-interpolated onto the
    /// region's own Chebyshev points.
    pub fn integrate_domain(&self, field: &GridField, region: Rect) -> Result<f64> {
        if !region.is_within_omega() {
            return Err(argument(format!("integration region {region:?} exceeds the domain")));
        }
        if field.n != self.n {
            return Err(argument("field resolution does not match the grid"));
        }
        let n = self.n;
        let w = &self.cc_weights;
        if region.is_omega() {
            let mut acc = 0.0;
            for i in 0..n {
                let row: f64 = (0..n).map(|j| w[j] * field.values[i * n + j]).sum();
                acc += w[i] * row;
            }
            return Ok(acc);
        }
        let map = |a: f64, b: f64| -> Vec<f64> { self.nodes.iter().map(|t| 0.5 * (a + b) + 0.5 * (b - a) * t).collect() };
        let wxs: Vec<Vec<f64>> = map(region.x0, region.x1).iter().map(|&x| self.spline.weights(x)).collect();
        let wys: Vec<Vec<f64>> = map(region.y0, region.y1).iter().map(|&y| self.spline.weights(y)).collect();
        let f = DMatrix::from_row_slice(n, n, &field.values);
        let wx = DMatrix::from_fn(n, n, |r, c| wxs[r][c]);
        let wy = DMatrix::from_fn(n, n, |r, c| wys[r][c]);
        let sampled = &wx * f * wy.transpose();
        let jac = 0.25 * (region.x1 - region.x0) * (region.y1 - region.y0);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += w[i] * w[j] * sampled[(i, j)];
            }
        }
        Ok(jac * acc)
    }
}

fn to_field(m: &DMatrix<f64>) -> GridField {
    let n = m.nrows();
    let mut values = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            values.push(m[(i, j)]);
        }
    }
    GridField { n, values }
}

/// Matrix-free `Δ^N`: interior rows apply the collocation Laplacian, boundary
/// rows the outward normal derivative.
pub struct NeumannLaplacian<'a> {
    grid: &'a ChebGrid,
}

impl NeumannLaplacian<'_> {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let n = g.n;
        let um = DMatrix::from_row_slice(n, n, u);
        let uxx = &g.d2 * &um;
        let uyy = &um * g.d2.transpose();
        let ux = &g.d1 * &um;
        let uy = &um * g.d1.transpose();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = if g.is_boundary(i, j) {
                    let nrm = g.boundary_normal(i, j);
                    nrm[0] * ux[(i, j)] + nrm[1] * uy[(i, j)]
                } else {
                    uxx[(i, j)] + uyy[(i, j)]
                };
            }
        }
        out
    }

    /// Dense `N² × N²` matrix; only sensible for small grids.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let size = self.grid.size();
        let mut m = DMatrix::zeros(size, size);
        let mut e = vec![0.0; size];
        for c in 0..size {
            e[c] = 1.0;
            let col = self.apply(&e);
            e[c] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        m
    }
}

/// Interpolation from grid values to scattered interior points. Row `r` is
/// the Kronecker product of the two 1D spline weight vectors of target `r`.
#[derive(Debug, Clone)]
pub struct InterpOperator {
    n: usize,
    wx: Vec<Vec<f64>>,
    wy: Vec<Vec<f64>>,
}

impl InterpOperator {
    pub fn targets(&self) -> usize {
        self.wx.len()
    }

    pub fn apply(&self, field: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.wx
            .iter()
            .zip(&self.wy)
            .map(|(wx, wy)| {
                (0..n)
                    .map(|i| {
                        if wx[i] == 0.0 {
                            return 0.0;
                        }
                        let row = &field[i * n..(i + 1) * n];
                        wx[i] * row.iter().zip(wy).map(|(a, b)| a * b).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn row(&self, r: usize) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.wx[r][i] * self.wy[r][j];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(self.targets(), n * n, |r, c| self.wx[r][c / n] * self.wy[r][c % n])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_interpolant_is_exact_for_polynomials() {
        let g = ChebGrid::new(12).unwrap();
        let f = GridField::from_fn(&g, |x, y| x.powi(5) * y - 3.0 * y.powi(7) + 1.0);
        let pts = [[0.123, -0.77], [g.nodes()[3], 0.5], [-0.999, 0.999]];
        let v = g.eval_polynomial(&f, &pts);
        for (p, val) in pts.iter().zip(v) {
            let exact = p[0].powi(5) * p[1] - 3.0 * p[1].powi(7) + 1.0;
            assert!((val - exact).abs() < 1e-12, "{val} vs {exact}");
        }
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(ChebGrid::new(7).is_err());
        assert!(ChebGrid::new(8).is_ok());
    }

    #[test]
    fn two_point_grid_is_the_endpoints() {
        let g = ChebGrid::with_any_size(2).unwrap();
        assert_eq!(g.nodes(), &[-1.0, 1.0]);
    }

    #[test]
    fn boundary_index_count_and_order() {
        let g = ChebGrid::new(10).unwrap();
        let b = g.boundary_index();
        assert_eq!(b.len(), 4 * 10 - 4);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.point(g.index(3, 7)), [g.nodes()[3], g.nodes()[7]]);
    }

    #[test]
    fn cc_weights_integrate_polynomials() {
        let g = ChebGrid::new(11).unwrap();
        let w = g.cc_weights();
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let s4: f64 = w.iter().zip(g.nodes()).map(|(w, x)| w * x.powi(4)).sum();
        assert!((s4 - 0.4).abs() < 1e-14);
    }

    #[test]
    fn spline_reproduces_linear_and_nodes() {
        let g = ChebGrid::new(12).unwrap();
        let s = g.spline();
        let w = s.weights(0.123);
        let lin: f64 = w.iter().zip(g.nodes()).map(|(w, x)| w * (2.0 * x - 1.0)).sum();
        assert!((lin - (2.0 * 0.123 - 1.0)).abs() < 1e-14);
        let w = s.weights(g.nodes()[4]);
        for (k, v) in w.iter().enumerate() {
            assert!((v - if k == 4 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn interp_rejects_points_outside() {
        let g = ChebGrid::new(10).unwrap();
        assert!(g.interp_matrix(&[[0.0, 1.0]]).is_err());
        assert!(g.interp_matrix(&[[1.2, 0.0]]).is_err());
    }

    #[test]
    fn integrate_rejects_oversized_region() {
        let g = ChebGrid::new(10).unwrap();
        let f = GridField::zeros(10);
        let r = Rect { x0: -1.5, x1: 0.0, y0: 0.0, y1: 1.0 };
        assert!(g.integrate_domain(&f, r).is_err());
    }
}
