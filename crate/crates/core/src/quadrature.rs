//! Area quadrature adapted to a closed contour inside a rectangle.
//!
//! Fields built from a single-layer potential are smooth on either side of
//! the contour but have a kink across it, which spoils tensor quadrature on
//! the Chebyshev grid. Here the enclosed region is covered by a polar map
//! from the centroid and the rest of the rectangle by straight segments
//! joining each contour point to the rectangle edge along the same ray.
//! Both maps are smooth, so Gauss–Legendre in the radial variable combined
//! with trapezoid (inside) or piecewise Gauss–Legendre (outside, split at
//! the corner rays) in the contour parameter converges spectrally.
//!
//! The construction needs the contour to be star-shaped with respect to its
//! centroid.

use crate::fourier::{self, TrigSeries};
use crate::geometry::{Contour, Point};
use crate::spectral::Rect;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Weighted nodes covering the region enclosed by a contour and the rest of
/// a rectangle.
#[derive(Debug, Clone)]
pub struct SplitQuadrature {
    pub inside: Vec<Point>,
    pub inside_weights: Vec<f64>,
    pub outside: Vec<Point>,
    pub outside_weights: Vec<f64>,
}

impl SplitQuadrature {
    /// Builds the rule, or returns `None` when the contour is not
    /// star-shaped about its centroid or does not lie strictly inside
    /// `rect`. Outside, each of the four pieces between corner rays gets
    /// `n_t` parameter nodes; inside, the trapezoid rule uses `4 n_t` (at
    /// least the contour node count). `n_r` is the number of radial nodes.
    pub fn new(contour: &Contour, rect: Rect, n_t: usize, n_r: usize) -> Option<SplitQuadrature> {
        if !contour.points().iter().all(|p| rect.contains_strictly(p[0], p[1])) {
            return None;
        }
        let c = contour.centroid();
        let m = contour.len();
        let fine = 4 * m;
        let xs = fourier::upsample(&contour.xs(), fine);
        let ys = fourier::upsample(&contour.ys(), fine);
        let dxs = fourier::derivative(&xs, 1);
        let dys = fourier::derivative(&ys, 1);
        let cross: Vec<f64> = (0..fine).map(|l| (xs[l] - c[0]) * dys[l] - (ys[l] - c[1]) * dxs[l]).collect();
        let peak = cross.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if cross.iter().any(|&v| v <= 1e-3 * peak) {
            return None;
        }
        if !xs.iter().zip(&ys).all(|(x, y)| rect.contains_strictly(*x, *y)) {
            return None;
        }
        let (gx, gw) = gauss_legendre(n_r);
        let radial: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w)).collect();

        // enclosed region: polar map from the centroid, trapezoid in t
        let mt = (4 * n_t).max(m);
        let mt = mt + mt % 2;
        let (px, py) = (fourier::upsample(&contour.xs(), mt), fourier::upsample(&contour.ys(), mt));
        let (pdx, pdy) = (fourier::derivative(&px, 1), fourier::derivative(&py, 1));
        let dt = 2.0 * PI / mt as f64;
        let mut inside = Vec::with_capacity(mt * n_r);
        let mut inside_weights = Vec::with_capacity(mt * n_r);
        for l in 0..mt {
            let (vx, vy) = (px[l] - c[0], py[l] - c[1]);
            let jac = vx * pdy[l] - vy * pdx[l];
            for &(r, w) in &radial {
                inside.push([c[0] + r * vx, c[1] + r * vy]);
                inside_weights.push(dt * w * r * jac);
            }
        }

        // outside: segments from the contour to the rectangle along rays
        let sx = TrigSeries::new(&contour.xs());
        let sy = TrigSeries::new(&contour.ys());
        let sdx = TrigSeries::new(&fourier::derivative(&contour.xs(), 1));
        let sdy = TrigSeries::new(&fourier::derivative(&contour.ys(), 1));
        let angle = |t: f64| (sy.eval(t) - c[1]).atan2(sx.eval(t) - c[0]);
        let corners = [[rect.x1, rect.y1], [rect.x0, rect.y1], [rect.x0, rect.y0], [rect.x1, rect.y0]];
        let mut cuts: Vec<f64> = corners
            .iter()
            .map(|k| parameter_of_angle(&angle, (k[1] - c[1]).atan2(k[0] - c[0]), fine))
            .collect::<Option<Vec<f64>>>()?;
        cuts.sort_by(f64::total_cmp);
        let (tx, tw) = gauss_legendre(n_t);
        let mut outside = Vec::with_capacity(4 * n_t * n_r);
        let mut outside_weights = Vec::with_capacity(4 * n_t * n_r);
        for k in 0..4 {
            let a = cuts[k];
            let b = if k == 3 { cuts[0] + 2.0 * PI } else { cuts[k + 1] };
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let side = active_side(rect, c, [sx.eval(mid) - c[0], sy.eval(mid) - c[1]]);
            for (x, w) in tx.iter().zip(&tw) {
                let t = mid + half * x;
                let p = [sx.eval(t), sy.eval(t)];
                let dp = [sdx.eval(t), sdy.eval(t)];
                let v = [p[0] - c[0], p[1] - c[1]];
                let (s, ds) = match side {
                    Side::X(bound) => {
                        let s = (bound - c[0]) / v[0];
                        (s, -s * dp[0] / v[0])
                    }
                    Side::Y(bound) => {
                        let s = (bound - c[1]) / v[1];
                        (s, -s * dp[1] / v[1])
                    }
                };
                let b = [c[0] + s * v[0], c[1] + s * v[1]];
                let db = [ds * v[0] + s * dp[0], ds * v[1] + s * dp[1]];
                let e = [b[0] - p[0], b[1] - p[1]];
                for &(r, wr) in &radial {
                    let dtv = [(1.0 - r) * dp[0] + r * db[0], (1.0 - r) * dp[1] + r * db[1]];
                    let jac = (e[0] * dtv[1] - e[1] * dtv[0]).abs();
                    outside.push([p[0] + r * e[0], p[1] + r * e[1]]);
                    outside_weights.push(half * w * wr * jac);
                }
            }
        }
        Some(SplitQuadrature { inside, inside_weights, outside, outside_weights })
    }

    pub fn points(&self) -> impl Iterator<Item = (&Point, f64)> {
        self.inside
            .iter()
            .zip(self.inside_weights.iter().copied())
            .chain(self.outside.iter().zip(self.outside_weights.iter().copied()))
    }
}

#[derive(Debug, Clone, Copy)]
enum Side {
    X(f64),
    Y(f64),
}

// rectangle edge hit first by the ray from `c` in direction `v`
fn active_side(rect: Rect, c: Point, v: Point) -> Side {
    let sx = if v[0] > 0.0 {
        Some(((rect.x1 - c[0]) / v[0], rect.x1))
    } else if v[0] < 0.0 {
        Some(((rect.x0 - c[0]) / v[0], rect.x0))
    } else {
        None
    };
    let sy = if v[1] > 0.0 {
        Some(((rect.y1 - c[1]) / v[1], rect.y1))
    } else if v[1] < 0.0 {
        Some(((rect.y0 - c[1]) / v[1], rect.y0))
    } else {
        None
    };
    match (sx, sy) {
        (Some((a, bx)), Some((b, by))) => {
            if a <= b {
                Side::X(bx)
            } else {
                Side::Y(by)
            }
        }
        (Some((_, bx)), None) => Side::X(bx),
        (None, Some((_, by))) => Side::Y(by),
        (None, None) => Side::X(rect.x1),
    }
}

// parameter at which the polar angle about the centroid equals `target`
fn parameter_of_angle(angle: &impl Fn(f64) -> f64, target: f64, samples: usize) -> Option<f64> {
    let wrap = |a: f64| {
        let mut d = (a - target) % (2.0 * PI);
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        d
    };
    let h = 2.0 * PI / samples as f64;
    for l in 0..samples {
        let (a, b) = (l as f64 * h, (l + 1) as f64 * h);
        let (fa, fb) = (wrap(angle(a)), wrap(angle(b)));
        if fa <= 0.0 && fb > 0.0 && fb - fa < PI {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if wrap(angle(mid)) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let integral = |k: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        assert!((integral(0) - 2.0).abs() < 1e-14);
        assert!((integral(12) - 2.0 / 13.0).abs() < 1e-14);
        assert!(integral(5).abs() < 1e-15);
    }

    fn ellipse(m: usize) -> Contour {
        Contour::new(
            (0..m)
                .map(|j| {
                    let t = fourier::node_parameter(j, m);
                    [0.3 * t.cos() + 0.2, 0.2 * t.sin() - 0.1]
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn areas_add_up() {
        let c = ellipse(64);
        let q = SplitQuadrature::new(&c, Rect::OMEGA, 32, 12).unwrap();
        let inside: f64 = q.inside_weights.iter().sum();
        let outside: f64 = q.outside_weights.iter().sum();
        assert!((inside - PI * 0.06).abs() < 1e-12, "{inside}");
        assert!((inside + outside - 4.0).abs() < 1e-12, "{}", inside + outside);
    }

    #[test]
    fn smooth_integrand_over_rectangle() {
        let c = ellipse(64);
        let rect = Rect::new(-0.5, 1.0, -0.5, 1.0).unwrap();
        let q = SplitQuadrature::new(&c, rect, 48, 24).unwrap();
        let f = |p: &Point| (3.0 * p[0]).sin() * (2.0 * p[1]).cos() + p[0] * p[0];
        let total: f64 = q.points().map(|(p, w)| w * f(p)).sum();
        let fx = |a: f64, b: f64| -((3.0 * b).cos() - (3.0 * a).cos()) / 3.0;
        let gy = |a: f64, b: f64| ((2.0 * b).sin() - (2.0 * a).sin()) / 2.0;
        let exact = fx(-0.5, 1.0) * gy(-0.5, 1.0) + (1.0f64.powi(3) + 0.125) / 3.0 * 1.5;
        assert!((total - exact).abs() < 1e-11, "{total} vs {exact}");
    }

    #[test]
    fn contour_leaving_rectangle_is_declined() {
        let c = ellipse(32);
        assert!(SplitQuadrature::new(&c, Rect::new(0.0, 1.0, -1.0, 1.0).unwrap(), 16, 8).is_none());
    }
}
