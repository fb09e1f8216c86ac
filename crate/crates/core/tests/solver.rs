use vrte::kernels::c1;
use vrte::optics::RefractiveProfile;
use vrte::physics::FrequencyGrid;
use vrte::solver::{
    contraction_ratio, from_celsius, iterate, solve, solve_with, update_moments, AlbedoModel, AtmosphereScenario,
    Boundary, KappaModel, Medium, RadiationState, SolveOptions, Transport,
};
use vrte::{Error, Execution};

fn small(kappa: f64, eps: f64) -> AtmosphereScenario {
    let mut s = AtmosphereScenario::case1(KappaModel::Constant(kappa), RefractiveProfile::cloud_slab(eps).unwrap());
    s.z = AtmosphereScenario::uniform_grid(34);
    s.freq = FrequencyGrid::geometric(0.002, 20.0, 64).unwrap();
    s
}

#[test]
fn branches_are_monotone_and_ordered() {
    let s = small(0.5, 0.01);
    let sol = solve(&s, &SolveOptions::default()).unwrap();
    let r = &sol.report;
    assert!(r.converged && r.monotone_increasing && r.monotone_decreasing && r.bracketed, "{:?}", r.violations);
    assert!(r.j0_monotone_increasing && r.j0_monotone_decreasing);
    assert!(r.records.iter().all(|x| x.bracket_min >= -1e-10));
    assert!(r.bracket_width < 2e-4);
    let inc = r.trace_increasing();
    assert!(inc.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    let dec = r.trace_decreasing();
    assert!(dec.windows(2).all(|w| w[1] <= w[0] + 1e-10));
}

#[test]
fn no_sources_gives_zero_temperature() {
    let mut s = small(0.8, 0.0);
    s.boundary = Boundary::none();
    let opts = SolveOptions {
        hot_start: Some(from_celsius(50.0)),
        max_iter: 600,
        ..SolveOptions::default()
    };
    let sol = solve(&s, &opts).unwrap();
    assert!(sol.lower.t.iter().all(|&t| t == 0.0));
    assert!(sol.upper.t.iter().all(|&t| t.abs() < 2e-4));
}

#[test]
fn stronger_ground_source_warms_everywhere() {
    let s = small(0.5, 0.01);
    let mut warm = s.clone();
    warm.boundary.ground_intensity *= 1.1;
    let opts = SolveOptions {
        tol: 1e-7,
        max_iter: 200,
        ..SolveOptions::default()
    };
    let a = solve(&s, &opts).unwrap();
    let b = solve(&warm, &opts).unwrap();
    assert!(a.temperature().iter().zip(b.temperature()).all(|(x, y)| y >= x));
}

#[test]
fn converged_state_is_a_fixed_point() {
    let s = small(0.5, 0.0);
    let opts = SolveOptions {
        tol: 1e-13,
        max_iter: 400,
        ..SolveOptions::default()
    };
    let medium = Medium::new(&s).unwrap();
    let transport = Transport::build(&s, &medium, &opts.kernels, Execution::Sequential).unwrap();
    let sol = solve_with(&s, &medium, &transport, &opts).unwrap();
    let next = iterate(sol.state(), &medium, &transport, &opts).unwrap();
    for (a, b) in next.t.iter().zip(&sol.upper.t) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn hot_start_at_180_celsius_decreases() {
    let s = small(0.5, 0.01);
    let medium = Medium::new(&s).unwrap();
    let opts = SolveOptions::default();
    let transport = Transport::build(&s, &medium, &opts.kernels, Execution::Sequential).unwrap();
    let hot = RadiationState::hot(&medium, from_celsius(180.0));
    let next = update_moments(&hot, &medium, &transport, opts.form, Execution::Sequential);
    assert!(next.j0.iter().zip(&hot.j0).all(|(a, b)| a <= b));
    let sol = solve(
        &s,
        &SolveOptions {
            hot_start: Some(from_celsius(180.0)),
            ..opts
        },
    )
    .unwrap();
    assert_eq!(sol.report.hot_start_doublings, 0);
    assert!(sol.report.hot_start_verified && sol.report.monotone_decreasing);
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let s = small(0.5, 0.01);
    let run = |execution| {
        solve(
            &s,
            &SolveOptions {
                execution,
                ..SolveOptions::default()
            },
        )
        .unwrap()
    };
    let (a, b) = (run(Execution::Sequential), run(Execution::Parallel));
    assert_eq!(a.upper, b.upper);
    assert_eq!(a.lower, b.lower);
}

#[test]
fn iteration_cap_reports_history() {
    let s = small(0.5, 0.01);
    let opts = SolveOptions {
        max_iter: 3,
        ..SolveOptions::default()
    };
    match solve(&s, &opts) {
        Err(Error::NotConverged { iterations, report, .. }) => {
            assert_eq!(iterations, 3);
            assert_eq!(report.records.len(), 4);
        }
        other => panic!("{:?}", other.map(|s| s.report.iterations)),
    }
}

#[test]
fn contraction_specializes_for_uniform_media() {
    let mut s = small(0.7, 0.0);
    s.albedo = AlbedoModel::Uniform(0.2);
    let d = contraction_ratio(&s);
    let want = 0.7 * c1(0.7) * (1.0 + s.beta * 0.2);
    assert!((d.eta_ratio - want).abs() < 1e-14 * want);
    assert!(!d.certifies() || d.bound().is_some());
    s.kappa = KappaModel::Constant(1e-3);
    assert!(contraction_ratio(&s).eta_ratio < 1e-5);
}
