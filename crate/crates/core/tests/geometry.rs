use std::f64::consts::PI;

use contour_opt::presets::ContourPreset;
use contour_opt::{resample_equal_arclength, Contour};
use proptest::prelude::*;

/// Adaptive Simpson on [a, b].
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
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

#[test]
fn circle_length_is_the_circumference() {
    let c = ContourPreset::C1.contour(64).unwrap();
    assert!((c.length() - 0.8 * PI).abs() < 1e-12);
    assert!(c.arclength_nonuniformity() < 1e-6);
}

#[test]
fn ellipse_length_matches_quadrature_of_speed() {
    let oracle = adaptive_simpson(&|t| (0.09 * t.sin().powi(2) + 0.04 * t.cos().powi(2)).sqrt(), 0.0, 2.0 * PI, 1e-13);
    let c = ContourPreset::C3.contour(64).unwrap();
    assert!((c.length() - oracle).abs() < 1e-8 * oracle, "{} vs {oracle}", c.length());
}

#[test]
fn ellipse_curvature_and_normals() {
    let c = ContourPreset::C3.contour(128).unwrap();
    assert!((c.points()[0][0] - 0.3).abs() < 1e-14);
    // κ = ab / (a² sin²t + b² cos²t)^{3/2} at t = 0
    let k0 = 0.3 * 0.2 / (0.2f64 * 0.2).powf(1.5);
    assert!((c.curvature().values[0] - k0).abs() < 1e-9 * k0);
    // the quarter-length node is the top of the ellipse by symmetry
    let q = c.points()[32];
    assert!(q[0].abs() < 1e-12 && (q[1] - 0.2).abs() < 1e-12);
    let n = c.normals()[32];
    assert!(n[0].abs() < 1e-10 && (n[1] - 1.0).abs() < 1e-10);
}

#[test]
fn circle_curvature_normals_and_orientation() {
    let c = ContourPreset::C1.contour(64).unwrap();
    assert!(c.curvature().values.iter().all(|k| (k - 2.5).abs() < 1e-10));
    let n0 = c.normals()[0];
    assert!((n0[0] - 1.0).abs() < 1e-12 && n0[1].abs() < 1e-12);
    for (n, t) in c.normals().iter().zip(c.tangents()) {
        assert!((n[0] * t[0] + n[1] * t[1]).abs() < 1e-12);
    }
    let r = c.reversed();
    assert!(r.curvature().values.iter().all(|k| (k + 2.5).abs() < 1e-10));
    let (a, b) = (c.normals(), r.normals());
    let rn = b[r.points().iter().position(|p| p == &c.points()[5]).unwrap()];
    assert!((rn[0] + a[5][0]).abs() < 1e-12 && (rn[1] + a[5][1]).abs() < 1e-12);
}

#[test]
fn total_curvature_is_two_pi() {
    // C5's arclength parametrization is not band-limited; at 64 nodes the
    // trapezoid sum is only good to ~5e-8, so it joins at 100 nodes.
    for (p, m) in ContourPreset::ALL.into_iter().flat_map(|p| [(p, 64), (p, 100)]) {
        if p == ContourPreset::C5 && m == 64 {
            continue;
        }
        let total = p.contour(m).unwrap().curvature().integral();
        assert!((total - 2.0 * PI).abs() < 1e-8 * 2.0 * PI, "{} M={m}: {total}", p.name());
    }
}

#[test]
fn containment_examples() {
    assert!(ContourPreset::C1.contour(64).unwrap().contains_in_domain(0.05));
    let big = Contour::from_parametric(|t| [0.99 * t.cos(), 0.99 * t.sin()], 256, 64).unwrap();
    assert!(!big.contains_in_domain(0.05));
    let c6 = ContourPreset::C6.contour(64).unwrap();
    assert!(c6.contains_in_domain(0.1));
    let xmin = c6.xs().into_iter().fold(f64::INFINITY, f64::min);
    assert!(xmin > -0.877 - 1e-3 && xmin < -0.876);
}

#[test]
fn self_intersecting_input_is_rejected() {
    let eight: Vec<[f64; 2]> = (0..64)
        .map(|j| {
            let t = 2.0 * PI * j as f64 / 64.0;
            [0.5 * t.sin(), 0.3 * (2.0 * t).sin()]
        })
        .collect();
    assert!(matches!(Contour::new(eight), Err(contour_opt::Error::Geometry(_))));
}

fn star(center: [f64; 2], radius: f64, amps: &[(f64, f64)]) -> impl Fn(f64) -> [f64; 2] + '_ {
    move |t| {
        let r = radius * (1.0 + amps.iter().enumerate().map(|(k, (a, ph))| a * ((k as f64 + 2.0) * t + ph).cos()).sum::<f64>());
        [center[0] + r * t.cos(), center[1] + r * t.sin()]
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resampling_is_idempotent_and_keeps_length(
        cx in -0.2..0.2f64,
        cy in -0.2..0.2f64,
        radius in 0.2..0.5f64,
        amps in proptest::collection::vec((-0.05..0.05f64, 0.0..6.28f64), 1..4),
        m in (48usize..80).prop_map(|k| 2 * k),
    ) {
        let c = Contour::from_parametric(star([cx, cy], radius, &amps), 512, m).unwrap();
        prop_assert!(c.arclength_nonuniformity() < 1e-6, "nonuniformity {:e}", c.arclength_nonuniformity());
        let again = resample_equal_arclength(&c, m).unwrap();
        for (p, q) in c.points().iter().zip(again.points()) {
            prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
        }
        let fine = resample_equal_arclength(&c, 2 * m).unwrap();
        prop_assert!((fine.length() - c.length()).abs() < 1e-8 * c.length());
        prop_assert!(c.is_counter_clockwise());
    }
}
