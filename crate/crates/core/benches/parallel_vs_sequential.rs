use std::path::Path;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use vrte::io::RunConfig;
use vrte::kernels::{KernelGeometry, KernelTable};
use vrte::solver::{
    newton_temperature, solve, update_moments, AtmosphereScenario, KernelSettings, Medium, RadiationState,
    SolveOptions, SourceForm, Transport, T_EARTH,
};
use vrte::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn scenario() -> AtmosphereScenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/case1_eps.cfg");
    let mut c = RunConfig::load(&path).expect("shipped config");
    c.kappa = vrte::io::KappaSource::File("gemini_kappa.txt".into());
    c.scenario().expect("valid scenario")
}

fn kernels(c: &mut Criterion) {
    let s = scenario();
    let ks = KernelSettings::default();
    let mut g = c.benchmark_group("kernel_table");
    g.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("geometry", name), |b| {
            b.iter(|| KernelGeometry::build(&s.z, &s.profile, s.shape, &ks.quad, ks.dz_inner, exec).unwrap())
        });
    }
    let geo = KernelGeometry::build(&s.z, &s.profile, s.shape, &ks.quad, ks.dz_inner, Execution::Parallel).unwrap();
    let (lo, hi) = s.kappa_nu_range();
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("table", name), |b| {
            b.iter(|| KernelTable::build(&geo, lo, hi, ks.kappa_nodes, exec).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let s = scenario();
    let medium = Medium::new(&s).unwrap();
    let transport = Transport::build(&s, &medium, &KernelSettings::default(), Execution::Parallel).unwrap();
    let state = RadiationState::hot(&medium, 2.0 * T_EARTH);
    let mut g = c.benchmark_group("sweep");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("update_moments", name), |b| {
            b.iter(|| update_moments(&state, &medium, &transport, SourceForm::Stokes, exec))
        });
        g.bench_function(BenchmarkId::new("newton", name), |b| {
            b.iter(|| newton_temperature(&medium, &state.j0, &state.t, exec).unwrap())
        });
    }
    g.finish();
}

fn full_solve(c: &mut Criterion) {
    let s = scenario();
    let mut g = c.benchmark_group("solve");
    g.sample_size(10).measurement_time(Duration::from_secs(30));
    for (name, exec) in MODES {
        let opts = SolveOptions {
            execution: exec,
            kernels: KernelSettings::default(),
            ..SolveOptions::default()
        };
        g.bench_function(BenchmarkId::new("case1_cloud", name), |b| b.iter(|| solve(&s, &opts).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, kernels, sweep, full_solve);
criterion_main!(benches);
