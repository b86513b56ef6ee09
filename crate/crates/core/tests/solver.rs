use contour_opt::presets::{ContourPreset, FieldPreset, FieldSpec};
use contour_opt::solver::{region_mask, solve_adjoint, solve_direct, CoupledSystem, Discretization, PhysicsConfig};
use contour_opt::{ContourFunction, GridField, Rect};

fn paper_physics() -> PhysicsConfig {
    PhysicsConfig {
        q: FieldSpec::Preset(FieldPreset::QPaper),
        target: FieldSpec::Preset(FieldPreset::UbarCells),
        ..PhysicsConfig::default()
    }
}

#[test]
fn energy_balance_on_the_circle() {
    let disc = Discretization::new(50).unwrap();
    let physics = paper_physics();
    let c = ContourPreset::C1.contour(100).unwrap();
    let sys = CoupledSystem::new(&disc, &physics, &c).unwrap();
    let sol = solve_direct(&sys).unwrap();
    let heat = ContourFunction::new(sol.u_on_c.values.iter().map(|u| physics.gamma * (u - physics.u0)).collect(), c.length());
    assert!((heat.integral() - 145.0).abs() < 1e-5 * 145.0, "{}", heat.integral());
    assert!(sol.flux_jump_residual(1.0, 1.0, 10.0).max_abs() < 1e-6);
    assert!(sol.diagnostics.backward_error < 1e-12);
}

#[test]
fn grid_refinement_barely_moves_probe_values() {
    let physics = paper_physics();
    let probes: Vec<[f64; 2]> = (0..20)
        .map(|k| {
            let t = k as f64 * 0.9;
            [0.85 * t.sin(), 0.85 * (1.7 * t).cos()]
        })
        .collect();
    let values: Vec<Vec<f64>> = [30usize, 40, 50]
        .iter()
        .map(|&n| {
            let disc = Discretization::new(n).unwrap();
            let c = ContourPreset::C4.contour(100).unwrap();
            let sys = CoupledSystem::new(&disc, &physics, &c).unwrap();
            solve_direct(&sys).unwrap().eval_points(disc.grid(), &probes).unwrap()
        })
        .collect();
    let change = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    // the spline coupling converges algebraically, so N = 30 sits at ~1.05e-6
    let coarse = change(&values[0], &values[2]);
    let fine = change(&values[1], &values[2]);
    assert!(coarse < 2e-6, "{coarse:e}");
    assert!(fine < 1e-6 && fine < coarse / 4.0, "{fine:e}");
}

#[test]
fn adjoint_vanishes_when_target_is_reached() {
    let disc = Discretization::new(24).unwrap();
    let c = ContourPreset::C3.contour(48).unwrap();
    let mut physics = paper_physics();
    let direct = solve_direct(&CoupledSystem::new(&disc, &physics, &c).unwrap()).unwrap();
    physics.target = FieldSpec::Samples(direct.u_grid.clone());
    let sys = CoupledSystem::new(&disc, &physics, &c).unwrap();
    let adj = solve_adjoint(&sys, &direct).unwrap();
    assert!(adj.u_grid.max_abs() < 1e-12 && adj.mu.values.iter().all(|m| m.abs() < 1e-12));
}

#[test]
fn adjoint_energy_balance_and_continuity() {
    let n = 50;
    let disc = Discretization::new(n).unwrap();
    let c = ContourPreset::C2.contour(100).unwrap();
    let physics = PhysicsConfig { region: Rect::OMEGA, ..paper_physics() };
    let sys = CoupledSystem::new(&disc, &physics, &c).unwrap();
    let direct = solve_direct(&sys).unwrap();
    let adj = solve_adjoint(&sys, &direct).unwrap();

    let target = physics.target.sample(disc.grid()).unwrap();
    let chi = region_mask(disc.grid(), physics.region);
    let forcing = GridField::new(n, (0..n * n).map(|i| (direct.u_grid.values[i] - target.values[i]) * chi[i]).collect()).unwrap();
    let source = disc.grid().integrate_domain(&forcing, Rect::OMEGA).unwrap();
    let heat = ContourFunction::new(adj.u_on_c.values.iter().map(|u| physics.gamma * u).collect(), c.length()).integral();
    assert!((heat - source).abs() < 1e-5 * source.abs(), "{heat} vs {source}");
    // adjoint problem has zero reference temperature
    assert!(adj.flux_jump_residual(1.0, 1.0, 0.0).max_abs() < 1e-6);
}

#[test]
fn solution_is_linear_in_the_source() {
    let disc = Discretization::new(20).unwrap();
    let c = ContourPreset::C5.contour(64).unwrap();
    let base = PhysicsConfig { u0: 0.0, ..paper_physics() };
    let q = base.q.sample(disc.grid()).unwrap();
    let doubled = PhysicsConfig { q: FieldSpec::Samples(q.map(|v| 2.0 * v)), ..base.clone() };
    let a = solve_direct(&CoupledSystem::new(&disc, &base, &c).unwrap()).unwrap();
    let b = solve_direct(&CoupledSystem::new(&disc, &doubled, &c).unwrap()).unwrap();
    for (x, y) in a.u_grid.values.iter().zip(&b.u_grid.values) {
        assert!((2.0 * x - y).abs() < 1e-10 * y.abs().max(1.0));
    }
}

#[test]
fn invalid_physics_is_rejected() {
    let disc = Discretization::new(12).unwrap();
    let c = ContourPreset::C2.contour(32).unwrap();
    for physics in [PhysicsConfig { k: 0.0, ..PhysicsConfig::default() }, PhysicsConfig { gamma: -1.0, ..PhysicsConfig::default() }] {
        assert!(CoupledSystem::new(&disc, &physics, &c).is_err());
    }
}
