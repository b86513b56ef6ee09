use std::f64::consts::PI;

use contour_opt::potential::{build_nystrom, eval_single_layer, trace_normal_derivatives, LayerDensity, LayerEvaluator};
use contour_opt::presets::ContourPreset;
use contour_opt::{ChebGrid, Contour};
use nalgebra::DVector;
use proptest::prelude::*;

const R: f64 = 0.4;

fn origin_circle(m: usize) -> Contour {
    Contour::from_parametric(|t| [R * t.cos(), R * t.sin()], 512, m).unwrap()
}

fn smooth_density(c: &Contour) -> LayerDensity {
    let m = c.len();
    LayerDensity::new((0..m).map(|l| 1.0 + 0.3 * (2.0 * PI * l as f64 / m as f64).sin() - 0.2 * (6.0 * PI * l as f64 / m as f64).cos()).collect())
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 60)
}

#[test]
fn uniform_circle_potential_inside_and_outside() {
    let c = origin_circle(64);
    let mu = LayerDensity::constant(64, 1.0);
    let v = eval_single_layer(&c, &mu, &[[0.0, 0.0], [0.1, -0.15], [0.9, 0.0], [-0.5, 0.6]]).unwrap();
    let inside = -R * R.ln();
    assert!((inside - 0.366516).abs() < 1e-6);
    assert!((v[0] - inside).abs() < 1e-12 && (v[1] - inside).abs() < 1e-10);
    assert!((v[2] + R * 0.9f64.ln()).abs() < 1e-12);
    assert!((v[3] + R * 0.5f64.hypot(0.6).ln()).abs() < 1e-12);
    assert!(eval_single_layer(&c, &mu, &[[R, 0.0]]).is_err());
}

#[test]
fn nystrom_circle_values() {
    let c = origin_circle(64);
    let g = ChebGrid::new(20).unwrap();
    let ops = build_nystrom(&c, &g).unwrap();
    for i in 0..64 {
        assert!(ops.k2.row(i).sum().abs() < 1e-13);
    }
    let diag = -c.length() / (2.0 * PI * 64.0) * (c.length() / (2.0 * PI)).ln();
    assert!((ops.k1[(3, 3)] - diag).abs() < 1e-15);
    let on = ops.single_layer_matrix() * DVector::from_element(64, 1.0);
    assert!(on.iter().all(|v| (v + R * R.ln()).abs() < 1e-12), "{}", on[0]);

    // u_h = −R ln|x| outside, so ∂n u_h = −R (b·n)/|b|²
    let b1 = ops.apply_b(&[1.0; 64]);
    for &idx in &ops.boundary_index {
        let (i, j) = (idx / 20, idx % 20);
        let b = g.point(idx);
        let n = g.boundary_normal(i, j);
        let exact = -R * (b[0] * n[0] + b[1] * n[1]) / (b[0] * b[0] + b[1] * b[1]);
        assert!((b1[idx] - exact).abs() < 1e-12, "({i},{j})");
    }
}

#[test]
fn on_contour_operator_converges_fast() {
    // nodes of M nest inside those of 2M, so compare at shared nodes
    let reference = {
        let c = ContourPreset::C3.contour(512).unwrap();
        let ops = build_nystrom(&c, &ChebGrid::new(8).unwrap()).unwrap();
        ops.single_layer_matrix() * DVector::from_vec(smooth_density(&c).values)
    };
    let mut errs = Vec::new();
    for m in [16usize, 32, 64] {
        let c = ContourPreset::C3.contour(m).unwrap();
        let ops = build_nystrom(&c, &ChebGrid::new(8).unwrap()).unwrap();
        let v = ops.single_layer_matrix() * DVector::from_vec(smooth_density(&c).values);
        let stride = 512 / m;
        errs.push((0..m).map(|l| (v[l] - reference[l * stride]).abs()).fold(0.0, f64::max));
    }
    for w in errs.windows(2) {
        assert!(w[1] < w[0] / 4.0 || w[1] < 1e-12, "{errs:?}");
    }
}

#[test]
fn uniform_circle_traces_match_finite_differences() {
    let c = origin_circle(64);
    let mu = LayerDensity::constant(64, 1.0);
    let (s1, s2) = trace_normal_derivatives(&c, &mu).unwrap();
    assert!(s1.values.iter().all(|v| v.abs() < 1e-12));
    assert!(s2.values.iter().all(|v| (v + 1.0).abs() < 1e-12));

    // one-sided differences at radius R ± δ, δ = 1e-4, of the layer
    // integral done by adaptive Simpson
    let d = 1e-4;
    let a = 0.7f64;
    let at = |r: f64| {
        let (x, y) = (r * a.cos(), r * a.sin());
        let f = |t: f64| (x - R * t.cos()).hypot(y - R * t.sin()).ln() * R;
        -adaptive_simpson(&f, a - PI, a + PI, 1e-13) / (2.0 * PI)
    };
    let inner = (at(R - d) - at(R - 2.0 * d)) / d;
    let outer = (at(R + 2.0 * d) - at(R + d)) / d;
    assert!(inner.abs() < 1e-3, "{inner}");
    assert!((outer + 1.0).abs() < 1e-3, "{outer}");
}

#[test]
fn outer_flux_balances_total_density() {
    let n = 50;
    let g = ChebGrid::new(n).unwrap();
    let c = ContourPreset::C2.contour(64).unwrap();
    let mu = smooth_density(&c);
    let ops = build_nystrom(&c, &g).unwrap();
    let b = ops.apply_b(&mu.values);
    let w = g.cc_weights();
    let mut flux = 0.0;
    for &idx in &ops.boundary_index {
        let (i, j) = (idx / n, idx % n);
        let corner = (i == 0 || i == n - 1) && (j == 0 || j == n - 1);
        // corner rows hold the averaged normal, so both faces' share is 2·w₀·B
        let weight = if corner { 2.0 * w[0] } else if i == 0 || i == n - 1 { w[j] } else { w[i] };
        flux += weight * b[idx];
    }
    let total = mu.values.iter().sum::<f64>() * c.arc_step();
    assert!((flux + total).abs() < 1e-6 * total, "{flux} vs {}", -total);
}

#[test]
fn near_field_evaluator_resolves_points_close_to_the_curve() {
    let c = origin_circle(64);
    let mu = LayerDensity::constant(64, 1.0);
    let inside = -R * R.ln();
    let ev = LayerEvaluator::new(&c, &mu, &[inside; 64]).unwrap();
    // within reach of the largest oversampling: 5h/d ≤ 256
    for d in [1e-1, 1e-2, 1e-3] {
        let a = 0.31f64;
        let v_in = ev.eval([(R - d) * a.cos(), (R - d) * a.sin()]);
        let v_out = ev.eval([(R + d) * a.cos(), (R + d) * a.sin()]);
        assert!((v_in - inside).abs() < 1e-8, "d={d}: {v_in}");
        assert!((v_out + R * (R + d).ln()).abs() < 1e-8, "d={d}: {v_out}");
    }
    assert!((ev.eval([R, 0.0]) - inside).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn potential_is_linear_and_traces_jump_by_density(
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        coeffs in proptest::collection::vec(-1.0..1.0f64, 4),
    ) {
        let c = ContourPreset::C4.contour(48).unwrap();
        let mu1 = smooth_density(&c);
        let mu2 = LayerDensity::new((0..48).map(|l| {
            let t = 2.0 * PI * l as f64 / 48.0;
            coeffs[0] + coeffs[1] * t.cos() + coeffs[2] * (2.0 * t).sin() + coeffs[3] * (3.0 * t).cos()
        }).collect());
        let combo = LayerDensity::new(mu1.values.iter().zip(&mu2.values).map(|(x, y)| a * x + b * y).collect());
        let pts = [[0.0, 0.9], [-0.8, -0.7], [0.1, 0.1]];
        let v1 = eval_single_layer(&c, &mu1, &pts).unwrap();
        let v2 = eval_single_layer(&c, &mu2, &pts).unwrap();
        let v = eval_single_layer(&c, &combo, &pts).unwrap();
        for k in 0..3 {
            prop_assert!((v[k] - a * v1[k] - b * v2[k]).abs() < 1e-12 * (1.0 + v[k].abs()));
        }
        let (s1, s2) = trace_normal_derivatives(&c, &mu2).unwrap();
        for l in 0..48 {
            prop_assert!((s1.values[l] - s2.values[l] - mu2.values[l]).abs() < 1e-12);
        }
    }
}
