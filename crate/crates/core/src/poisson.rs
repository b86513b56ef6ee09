//! Direct solver for the grid block of the coupled system: interior rows
//! `−Δu`, boundary rows the outward normal derivative (averaged normal at
//! corners).
//!
//! Face values are eliminated line by line from the Neumann rows, which
//! leaves a Sylvester equation `D̃X + XD̃ᵀ = F` for the interior values. It
//! is solved in the real Schur basis of `D̃` (Bartels–Stewart). Corner values
//! follow from a 4×4 system. The operator is singular on constants; the
//! solver works with the rank-one regularization `G + a bᵀ` whose vectors
//! are exposed so that callers can undo it with Sherman–Morrison.

use crate::error::{numerical, Result};
use crate::spectral::ChebGrid;
use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};

#[derive(Debug, Clone)]
pub struct NeumannPoisson {
    n: usize,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    e_lo: Vec<f64>,
    e_hi: Vec<f64>,
    h: Matrix2<f64>,
    c_lo: Vec<f64>,
    c_hi: Vec<f64>,
    q: DMatrix<f64>,
    t: DMatrix<f64>,
    pivot: usize,
    shift: f64,
    corner_inv: Matrix4<f64>,
}

const CORNERS: usize = 4;

impl NeumannPoisson {
    pub fn new(grid: &ChebGrid) -> Result<NeumannPoisson> {
        let n = grid.n();
        let e = n - 1;
        let ni = n - 2;
        let d1 = grid.d1().clone();
        let d2 = grid.d2().clone();

        let a2 = Matrix2::new(-d1[(0, 0)], -d1[(0, e)], d1[(e, 0)], d1[(e, e)]);
        let h = a2.try_inverse().ok_or_else(|| numerical("singular Neumann end conditions"))?;
        let e_lo: Vec<f64> = (1..e).map(|k| h[(0, 0)] * d1[(0, k)] - h[(0, 1)] * d1[(e, k)]).collect();
        let e_hi: Vec<f64> = (1..e).map(|k| h[(1, 0)] * d1[(0, k)] - h[(1, 1)] * d1[(e, k)]).collect();
        let c_lo: Vec<f64> = (1..e).map(|i| d2[(i, 0)] * h[(0, 0)] + d2[(i, e)] * h[(1, 0)]).collect();
        let c_hi: Vec<f64> = (1..e).map(|i| d2[(i, 0)] * h[(0, 1)] + d2[(i, e)] * h[(1, 1)]).collect();

        let reduced = DMatrix::from_fn(ni, ni, |a, b| {
            let (i, k) = (a + 1, b + 1);
            d2[(i, k)] + d2[(i, 0)] * e_lo[b] + d2[(i, e)] * e_hi[b]
        });
        let (q, mut t) = reduced.schur().unpack();
        for c in 0..ni {
            for r in (c + 1)..ni {
                if t[(r, c)].abs() > 1e-8 * t[(c, c)].abs().max(1.0) {
                    return Err(numerical("reduced Neumann operator has complex eigenvalues"));
                }
                t[(r, c)] = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..ni).collect();
        order.sort_by(|&x, &y| t[(x, x)].abs().total_cmp(&t[(y, y)].abs()));
        let pivot = order[0];
        let scale = t[(order[ni - 1], order[ni - 1])].abs();
        if t[(pivot, pivot)].abs() > 1e-8 * scale {
            return Err(numerical("reduced Neumann operator lost its constant null space"));
        }
        let shift = 2.0 * t[(order[1], order[1])];

        let mut corner = Matrix4::zeros();
        let cidx = |ic: usize, jc: usize| (ic != 0) as usize * 2 + (jc != 0) as usize;
        for &ic in &[0, e] {
            for &jc in &[0, e] {
                let row = cidx(ic, jc);
                let sx = if ic == 0 { -0.5 } else { 0.5 };
                let sy = if jc == 0 { -0.5 } else { 0.5 };
                for &k in &[0, e] {
                    corner[(row, cidx(k, jc))] += sx * d1[(ic, k)];
                    corner[(row, cidx(ic, k))] += sy * d1[(jc, k)];
                }
            }
        }
        let corner_inv = corner.try_inverse().ok_or_else(|| numerical("singular corner system"))?;

        Ok(NeumannPoisson { n, d1, d2, e_lo, e_hi, h, c_lo, c_hi, q, t, pivot, shift, corner_inv })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Applies the unregularized grid operator.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let e = n - 1;
        let um = DMatrix::from_row_slice(n, n, u);
        let lap = &self.d2 * &um + &um * self.d2.transpose();
        let ux = &self.d1 * &um;
        let uy = &um * self.d1.transpose();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let sx = if i == 0 { -1.0 } else if i == e { 1.0 } else { 0.0 };
                let sy = if j == 0 { -1.0 } else if j == e { 1.0 } else { 0.0 };
                out[i * n + j] = match (sx != 0.0, sy != 0.0) {
                    (false, false) => -lap[(i, j)],
                    (true, true) => 0.5 * (sx * ux[(i, j)] + sy * uy[(i, j)]),
                    _ => sx * ux[(i, j)] + sy * uy[(i, j)],
                };
            }
        }
        out
    }

    /// Interior pattern `q_p q_pᵀ` of the rank-one regularization, flattened
    /// onto the full grid (zero on the boundary).
    pub fn regularization_pattern(&self) -> Vec<f64> {
        let n = self.n;
        let qp = self.q.column(self.pivot);
        let mut v = vec![0.0; n * n];
        for a in 0..n - 2 {
            for b in 0..n - 2 {
                v[(a + 1) * n + b + 1] = qp[a] * qp[b];
            }
        }
        v
    }

    /// Vectors `(a, b)` such that [`NeumannPoisson::solve`] inverts `G + a bᵀ`.
    pub fn regularization(&self) -> (Vec<f64>, Vec<f64>) {
        let v = self.regularization_pattern();
        let a = v.iter().map(|x| -self.shift * x).collect();
        (a, v)
    }

    /// Solves `(G + a bᵀ) u = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let e = n - 1;
        let ni = n - 2;
        let r = |i: usize, j: usize| rhs[i * n + j];

        let f = DMatrix::from_fn(ni, ni, |a, b| {
            let (i, j) = (a + 1, b + 1);
            -r(i, j) - self.c_lo[a] * r(0, j) - self.c_hi[a] * r(e, j) - self.c_lo[b] * r(i, 0) - self.c_hi[b] * r(i, e)
        });
        let fhat = self.q.transpose() * f * &self.q;
        let y = self.sylvester(&fhat);
        let x = &self.q * y * self.q.transpose();

        let mut u = vec![0.0; n * n];
        for a in 0..ni {
            for b in 0..ni {
                u[(a + 1) * n + b + 1] = x[(a, b)];
            }
        }
        // faces: x-direction lines (j interior) and y-direction lines (i interior)
        for b in 0..ni {
            let j = b + 1;
            let (mut lo, mut hi) = (0.0, 0.0);
            for a in 0..ni {
                lo += self.e_lo[a] * x[(a, b)];
                hi += self.e_hi[a] * x[(a, b)];
            }
            let (glo, ghi) = (r(0, j), r(e, j));
            u[j] = lo + self.h[(0, 0)] * glo + self.h[(0, 1)] * ghi;
            u[e * n + j] = hi + self.h[(1, 0)] * glo + self.h[(1, 1)] * ghi;
        }
        for a in 0..ni {
            let i = a + 1;
            let (mut lo, mut hi) = (0.0, 0.0);
            for b in 0..ni {
                lo += self.e_lo[b] * x[(a, b)];
                hi += self.e_hi[b] * x[(a, b)];
            }
            let (glo, ghi) = (r(i, 0), r(i, e));
            u[i * n] = lo + self.h[(0, 0)] * glo + self.h[(0, 1)] * ghi;
            u[i * n + e] = hi + self.h[(1, 0)] * glo + self.h[(1, 1)] * ghi;
        }
        // corners
        let mut crhs = Vector4::zeros();
        let cidx = |ic: usize, jc: usize| (ic != 0) as usize * 2 + (jc != 0) as usize;
        for &ic in &[0, e] {
            for &jc in &[0, e] {
                let sx = if ic == 0 { -0.5 } else { 0.5 };
                let sy = if jc == 0 { -0.5 } else { 0.5 };
                let mut known = 0.0;
                for k in 1..e {
                    known += sx * self.d1[(ic, k)] * u[k * n + jc];
                    known += sy * self.d1[(jc, k)] * u[ic * n + k];
                }
                crhs[cidx(ic, jc)] = r(ic, jc) - known;
            }
        }
        let c = self.corner_inv * crhs;
        debug_assert_eq!(c.len(), CORNERS);
        u[0] = c[0];
        u[e] = c[1];
        u[e * n] = c[2];
        u[e * n + e] = c[3];
        u
    }

    /// Solves `T Y + Y Tᵀ = F` for upper-triangular `T`, with the singular
    /// diagonal entry at `(pivot, pivot)` shifted.
    fn sylvester(&self, f: &DMatrix<f64>) -> DMatrix<f64> {
        let ni = f.nrows();
        let t = &self.t;
        let mut y = DMatrix::<f64>::zeros(ni, ni);
        let mut col = vec![0.0; ni];
        for j in (0..ni).rev() {
            for i in 0..ni {
                col[i] = f[(i, j)];
            }
            for k in (j + 1)..ni {
                let tjk = t[(j, k)];
                if tjk != 0.0 {
                    let yk = y.column(k);
                    for i in 0..ni {
                        col[i] -= tjk * yk[i];
                    }
                }
            }
            let tjj = t[(j, j)];
            for i in (0..ni).rev() {
                let mut acc = col[i];
                for l in (i + 1)..ni {
                    acc -= t[(i, l)] * y[(l, j)];
                }
                let mut diag = t[(i, i)] + tjj;
                if i == self.pivot && j == self.pivot {
                    diag += self.shift;
                }
                y[(i, j)] = acc / diag;
            }
        }
        y
    }
}
