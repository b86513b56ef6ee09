use std::f64::consts::PI;

use contour_opt::gradient::{assemble_l2_gradient, eval_u0_profile, grad_u0_term, shape_derivative_u0, smooth_sobolev, ShapeGradient};
use contour_opt::presets::{ContourPreset, FieldPreset, FieldSpec};
use contour_opt::solver::{solve_adjoint, solve_direct, CoupledSystem, Discretization, PhysicsConfig};
use contour_opt::ContourFunction;
use proptest::prelude::*;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        acc += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn reached_target() -> (PhysicsConfig, Discretization) {
    let physics = PhysicsConfig { q: FieldSpec::Preset(FieldPreset::QPaper), ..PhysicsConfig::default() };
    (physics, Discretization::new(24).unwrap())
}

#[test]
fn zero_adjoint_gives_zero_or_pure_penalty() {
    let (mut physics, disc) = reached_target();
    let c = ContourPreset::C1.contour(64).unwrap();
    let direct = solve_direct(&CoupledSystem::new(&disc, &physics, &c).unwrap()).unwrap();
    physics.target = FieldSpec::Samples(direct.u_grid.clone());
    let adj = solve_adjoint(&CoupledSystem::new(&disc, &physics, &c).unwrap(), &direct).unwrap();

    let g = assemble_l2_gradient(&direct, &adj, &c, &physics, 0.0, 1.0).unwrap();
    assert!(g.max_abs() < 1e-10);

    let r = 0.4;
    let g = assemble_l2_gradient(&direct, &adj, &c, &physics, 100.0, 3.0).unwrap();
    let expected = 100.0 * (2.0 * PI * r - 3.0) / r;
    assert!(g.values.iter().all(|v| (v - expected).abs() < 1e-8 * expected.abs()), "{} vs {expected}", g.values[0]);
}

#[test]
fn gradient_is_linear_in_the_adjoint() {
    let physics = PhysicsConfig {
        q: FieldSpec::Preset(FieldPreset::QPaper),
        target: FieldSpec::Preset(FieldPreset::UbarSin),
        ..PhysicsConfig::default()
    };
    let disc = Discretization::new(24).unwrap();
    let c = ContourPreset::C4.contour(64).unwrap();
    let sys = CoupledSystem::new(&disc, &physics, &c).unwrap();
    let direct = solve_direct(&sys).unwrap();
    let adj = solve_adjoint(&sys, &direct).unwrap();
    let mut scaled = adj.clone();
    for f in [&mut scaled.u_on_c, &mut scaled.dn_u1, &mut scaled.dn_u2] {
        f.values.iter_mut().for_each(|v| *v *= -2.5);
    }
    let g = assemble_l2_gradient(&direct, &adj, &c, &physics, 0.0, 1.0).unwrap();
    let gs = assemble_l2_gradient(&direct, &scaled, &c, &physics, 0.0, 1.0).unwrap();
    for (a, b) in g.values.iter().zip(&gs.values) {
        assert!((b + 2.5 * a).abs() < 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn smoothing_response_per_mode() {
    let length = 1.7;
    let ell = 0.1;
    let m = 64;
    for k in 0..=8 {
        let f = ContourFunction::new((0..m).map(|l| (2.0 * PI * k as f64 * l as f64 / m as f64 + 0.3).cos()).collect(), length);
        let g = smooth_sobolev(&f, ell, length);
        let factor = 1.0 / (1.0 + (ell * 2.0 * PI * k as f64 / length).powi(2));
        for (a, b) in g.values.iter().zip(&f.values) {
            assert!((a - factor * b).abs() < 1e-12, "k={k}");
        }
    }
    // 0.64 for mode 3 on the circle of radius 0.4 with ℓ = 0.1
    let f = ContourFunction::new((0..64).map(|l| (6.0 * PI * l as f64 / 64.0).sin()).collect(), 0.8 * PI);
    let g = smooth_sobolev(&f, 0.1, 0.8 * PI);
    assert!((g.values[3] / f.values[3] - 0.64).abs() < 1e-12);
}

#[test]
fn linear_profile_examples() {
    let s = [0.0, 0.5, 1.0];
    let p = eval_u0_profile(10.0, 19.0, 1.0, &s);
    assert_eq!(p.values[1], 14.5);
    let p = eval_u0_profile(10.0, 16.0, 2.0, &[2.0]);
    assert_eq!(p.values[0], 16.0);
}

// κζ on the circle of radius 0.4, as a function of arc length
fn circle_forcing(s: f64, length: f64) -> f64 {
    let t = 2.0 * PI * s / length;
    (1.0 + 0.5 * t.cos() + 0.3 * (2.0 * t).sin()) / 0.4
}

#[test]
fn profile_shape_derivative_matches_perturbed_profile() {
    let (ta, tb) = (10.0, 16.0);
    let length = 0.8 * PI;
    let mut errs = Vec::new();
    for m in [64usize, 128] {
        let h = length / m as f64;
        let kappa = ContourFunction::new(vec![2.5; m], length);
        let zeta = ContourFunction::new((0..m).map(|l| circle_forcing(l as f64 * h, length) * 0.4).collect(), length);
        let d = shape_derivative_u0(ta, tb, length, &kappa, &zeta).unwrap();
        // oracle: central difference of Ta + (Tb − Ta) s_ε/L_ε, where the
        // perturbed arc length is ∫(1 + εκζ) by composite Simpson
        let eps = 1e-5;
        let profile = |s: f64, e: f64| {
            let se = s + e * simpson(&|x| circle_forcing(x, length), 0.0, s, 2000);
            let le = length + e * simpson(&|x| circle_forcing(x, length), 0.0, length, 2000);
            ta + (tb - ta) * se / le
        };
        let err = (0..m)
            .step_by(m / 16)
            .map(|l| {
                let s = l as f64 * h;
                let fd = (profile(s, eps) - profile(s, -eps)) / (2.0 * eps);
                (fd - d.values[l]).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 1e-3 && errs[1] < errs[0] / 3.5, "{errs:?}");
}

#[test]
fn adjoint_profile_term_matches_quadrature() {
    let (ta, tb, gamma) = (10.0, 16.0, 2.0);
    let m = 128;
    let length = 2.3;
    let h = length / m as f64;
    let kappa = ContourFunction::new((0..m).map(|l| 3.0 + (2.0 * PI * l as f64 / m as f64).cos()).collect(), length);

    let ones = ContourFunction::new(vec![1.0; m], length);
    let g = grad_u0_term(&ones, &kappa, gamma, ta, tb, length).unwrap();
    for l in 0..m {
        let s = l as f64 * h;
        let exact = -gamma * kappa.values[l] * (tb - ta) / length * ((length - s) - length / 2.0);
        assert!((g.values[l] - exact).abs() < 1e-12, "{l}");
    }

    // smooth trace: the wrap node makes the rule second order
    let ustar = |s: f64| (2.0 * PI * s / length).sin() + 0.4 * (4.0 * PI * s / length).cos();
    let mut errs = Vec::new();
    for m in [64usize, 128] {
        let h = length / m as f64;
        let kappa = ContourFunction::new(vec![3.0; m], length);
        let trace = ContourFunction::new((0..m).map(|l| ustar(l as f64 * h)).collect(), length);
        let g = grad_u0_term(&trace, &kappa, gamma, ta, tb, length).unwrap();
        let err = (0..m)
            .step_by(m / 16)
            .map(|l| {
                let s = l as f64 * h;
                let inner = simpson(&ustar, s, length, 4000) - simpson(&|x| x / length * ustar(x), 0.0, length, 4000);
                (g.values[l] + gamma * 3.0 * (tb - ta) / length * inner).abs()
            })
            .fold(0.0, f64::max);
        errs.push(err);
    }
    assert!(errs[1] < 1e-2 && errs[1] < errs[0] / 3.5, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothing_contracts_and_keeps_the_mean(
        values in proptest::collection::vec(-5.0..5.0f64, 32),
        ell in 0.01..1.0f64,
        length in 0.5..4.0f64,
    ) {
        let mean = values.iter().sum::<f64>() / 32.0;
        let centred = ContourFunction::new(values.iter().map(|v| v - mean).collect(), length);
        let g = smooth_sobolev(&centred, ell, length);
        prop_assert!(g.norm_l2() <= centred.norm_l2() * (1.0 + 1e-14));

        let f = ContourFunction::new(values, length);
        let g = smooth_sobolev(&f, ell, length);
        prop_assert!((g.values.iter().sum::<f64>() / 32.0 - mean).abs() < 1e-12);
        prop_assert!(ShapeGradient::new(f, ell).helmholtz_residual() < 1e-8);
    }
}
