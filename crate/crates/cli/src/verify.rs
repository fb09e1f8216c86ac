//! Numerical property checks run by `vrte verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrte::kernels::{
    ek_general, expint, phi_bound_check, table_gate, AltitudeShape, KernelGeometry, KernelTable, OpticalPath,
    QuadratureSpec, DEFAULT_DZ_INNER, ORDERS,
};
use vrte::optics::{admissibility, check_propagation, RefractiveProfile};
use vrte::physics::{rayleigh_p1, rayleigh_p2, FrequencyGrid};
use vrte::solver::{closure_residual, solve, AtmosphereScenario, KappaModel, SolveOptions, T_EARTH};
use vrte::Execution;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

/// The quick checks, or all of them.
pub fn run(quick: bool) -> Vec<Check> {
    let mut out = vec![kernel_precision(), stefan()];
    if !quick {
        out.push(refinement());
        out.push(phase_cancellation());
        out.push(propagation());
        out.push(lemma_bound(1000, 11));
        out.push(table_interpolation());
        out.push(monotone_traces());
        out.push(thermal_closure());
    }
    out
}

fn grid() -> Vec<f64> {
    AtmosphereScenario::uniform_grid(AtmosphereScenario::DEFAULT_NZ)
}

/// Constant index, `kappa = 0.5 (1 - z/2)`: kernels from the ground against
/// the classical exponential integrals, below 1% everywhere except the
/// logarithmic point `E_1(0)`.
pub fn kernel_precision() -> Check {
    let flat = RefractiveProfile::constant(1.0).expect("valid index");
    let q = QuadratureSpec::default();
    let shape = AltitudeShape::PRECISION_STUDY;
    let mut worst = (0.0f64, 0u32, 0.0f64);
    for k in ORDERS {
        for &z in &grid() {
            if k == 1 && z == 0.0 {
                continue;
            }
            let path = OpticalPath::new(z, 0.0, 0.5, shape, &flat);
            let exact = expint(k, 0.5 * shape.integral(0.0, z)).unwrap_or(f64::NAN);
            let e = ek_general(k, &path, &q).unwrap_or(f64::NAN);
            let rel = ((e - exact) / exact).abs();
            if !(rel <= worst.0) {
                worst = (rel, k, z);
            }
        }
    }
    Check::new(
        "kernel precision",
        worst.0 < 0.01,
        format!("max relative error {:.3e} (k={}, z={:.4}), gate 1e-2", worst.0, worst.1, worst.2),
    )
}

/// Frequency quadrature of the Planck function against Stefan's law.
pub fn stefan() -> Check {
    let g = FrequencyGrid::default();
    let worst = [0.02, T_EARTH, 0.2]
        .iter()
        .map(|&t| g.stefan_relative_error(t))
        .fold(0.0, f64::max);
    Check::new("stefan", worst < 1e-3, format!("max relative error {worst:.3e}, gate 1e-3"))
}

/// Cloud profile, `kappa = 0.5`: `E_1` error against a `1/800` quadrature
/// shrinks with the step at 95% of the nodes and stays below 0.012.
pub fn refinement() -> Check {
    let cloud = RefractiveProfile::cloud_slab(0.01).expect("valid slab");
    let q = QuadratureSpec::default();
    let steps = [1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0];
    let (mut mono, mut n, mut worst) = (0usize, 0usize, 0.0f64);
    for &z in &grid()[1..] {
        let path = OpticalPath::new(z, 0.0, 0.5, AltitudeShape::Uniform, &cloud);
        let Ok(oracle) = ek_general(1, &path, &q.with_step(1.0 / 800.0)) else {
            continue;
        };
        let errs: Vec<f64> = steps
            .iter()
            .map(|&d| ek_general(1, &path, &q.with_step(d)).map_or(f64::INFINITY, |e| (e - oracle).abs()))
            .collect();
        n += 1;
        if errs[0] >= errs[1] && errs[1] >= errs[2] {
            mono += 1;
        }
        worst = worst.max(errs[0]);
    }
    let frac = mono as f64 / n.max(1) as f64;
    Check::new(
        "step refinement",
        frac >= 0.95 && worst <= 0.012,
        format!("monotone at {mono}/{n} nodes, max error {worst:.3e}"),
    )
}

/// The `P1`, `P2` harmonics average to zero over the relative azimuth.
pub fn phase_cancellation() -> Check {
    let n = 64;
    let mut worst = 0.0f64;
    for &(mu, mup) in &[(0.3, -0.7), (0.9, 0.2), (-0.5, -0.5), (1.0, 0.1)] {
        let mut acc = [[0.0; 4]; 4];
        for s in 0..n {
            let d = 2.0 * std::f64::consts::PI * s as f64 / n as f64;
            let (p1, p2) = (rayleigh_p1(mu, mup, d), rayleigh_p2(mu, mup, d));
            for a in 0..4 {
                for b in 0..4 {
                    acc[a][b] += (p1[a][b] + p2[a][b]) / n as f64;
                }
            }
        }
        worst = acc.iter().flatten().fold(worst, |w, v| w.max(v.abs()));
    }
    Check::new("phase cancellation", worst < 1e-12, format!("largest averaged entry {worst:.3e}"))
}

/// Admissible directions stay admissible along their characteristics.
pub fn propagation() -> Check {
    let z = grid();
    let mut detail = Vec::new();
    let mut ok = true;
    for eps in [0.01, 0.03] {
        let p = RefractiveProfile::cloud_slab(eps).expect("valid slab");
        let r = check_propagation(&p, &z, 50);
        ok &= r.passed();
        detail.push(format!("eps={eps}: {} violations in {} rays", r.violations.len(), r.checked));
    }
    Check::new("admissibility propagation", ok, detail.join("; "))
}

/// Attenuation bound on random admissible rays of the two experiment profiles.
pub fn lemma_bound(samples: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut detail = Vec::new();
    let mut ok = true;
    for eps in [0.0, 0.01] {
        let p = RefractiveProfile::cloud_slab(eps).expect("valid slab");
        let mut failed = 0;
        for _ in 0..samples {
            let (z, zp): (f64, f64) = (rng.random(), rng.random());
            let lo = admissibility(z, &p).mu_hi;
            let mu = lo + (1.0 - lo) * rng.random::<f64>();
            let mu = mu.max(f64::MIN_POSITIVE);
            let kappa = rng.random_range(0.01..2.0);
            if !phi_bound_check(&OpticalPath::new(z, zp, kappa, AltitudeShape::Uniform, &p), mu) {
                failed += 1;
            }
        }
        ok &= failed == 0;
        detail.push(format!("eps={eps}: {failed}/{samples} above the bound"));
    }
    Check::new("attenuation bound", ok, detail.join("; "))
}

/// Interpolated kernel table against direct sums on the cloud profile.
pub fn table_interpolation() -> Check {
    let p = RefractiveProfile::cloud_slab(0.01).expect("valid slab");
    let z = grid();
    let gate = KernelGeometry::build(&z, &p, AltitudeShape::Uniform, &QuadratureSpec::default(), DEFAULT_DZ_INNER, Execution::default())
        .and_then(|g| {
            let t = KernelTable::build(&g, 1e-3, 10.0, KernelTable::DEFAULT_KAPPA_NODES, Execution::default())?;
            Ok(table_gate(&g, &t, 1000, 3))
        });
    match gate {
        Ok(g) => Check::new(
            "table interpolation",
            g.passed(),
            format!("max relative error {:.3e} over {} probes, gate {:.0e}", g.max_rel_error, g.probes, vrte::kernels::TableGate::THRESHOLD),
        ),
        Err(e) => Check::new("table interpolation", false, e.to_string()),
    }
}

fn cloud_case1() -> AtmosphereScenario {
    AtmosphereScenario::case1(
        KappaModel::Constant(0.5),
        RefractiveProfile::cloud_slab(0.01).expect("valid slab"),
    )
}

/// Ground-heated cloud atmosphere: both traces monotone, branches ordered,
/// and the final bracket below twice the tolerance.
pub fn monotone_traces() -> Check {
    let opts = SolveOptions::default();
    match solve(&cloud_case1(), &opts) {
        Ok(sol) => {
            let r = &sol.report;
            let ok = r.monotone_increasing && r.monotone_decreasing && r.bracketed && r.bracket_width < 2.0 * opts.tol;
            Check::new(
                "monotone traces",
                ok,
                format!(
                    "{} iterations, monotone {}/{}, bracket {:.3e}",
                    r.iterations, r.monotone_increasing, r.monotone_decreasing, r.bracket_width
                ),
            )
        }
        Err(e) => Check::new("monotone traces", false, e.to_string()),
    }
}

/// Relative thermal closure residual below `1e-8` once iterated to `tol = 1e-10`.
pub fn thermal_closure() -> Check {
    let opts = SolveOptions {
        tol: 1e-10,
        max_iter: 400,
        ..SolveOptions::default()
    };
    match solve(&cloud_case1(), &opts) {
        Ok(sol) => {
            let (res, scale) = closure_residual(&sol.medium, &sol.upper.j0, &sol.upper.t);
            Check::new(
                "thermal closure",
                res < 1e-8 * scale,
                format!("residual {:.3e} relative after {} iterations, gate 1e-8", res / scale, sol.report.iterations),
            )
        }
        Err(e) => Check::new("thermal closure", false, e.to_string()),
    }
}
