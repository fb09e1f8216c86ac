//! Acceptance suite: one PASS or FAIL line per criterion, nonzero exit if any fail.

use std::path::{Path, PathBuf};
use std::time::Instant;

use vrte::io::{write_outputs, RunConfig};
use vrte::optics::RefractiveProfile;
use vrte::physics::{azimuthal_average, PhaseKind};
use vrte::solver::{
    closure_residual, solve, AlbedoModel, AtmosphereScenario, KappaModel, Solution, SolveOptions, C_EARTH,
    TEMPERATURE_SCALE, T_EARTH,
};
use vrte::Execution;
use vrte_cli::verify;
use vrte_validation::IsotropicSlab;

/// Slack for ordering comparisons between temperatures.
const SLACK: f64 = 1e-10;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&configs().join(format!("{name}.cfg"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run_config(c: &RunConfig, opts: &SolveOptions) -> vrte::Result<(AtmosphereScenario, Solution)> {
    let s = c.scenario()?;
    let sol = solve(&s, opts)?;
    Ok((s, sol))
}

fn run_named(name: &str) -> vrte::Result<(AtmosphereScenario, Solution)> {
    let c = load(name);
    run_config(&c, &c.solve_options())
}

fn from_check(c: verify::Check) -> Outcome {
    outcome(c.passed, c.detail)
}

fn kernel_precision() -> Outcome {
    let start = Instant::now();
    let c = verify::kernel_precision();
    let secs = start.elapsed().as_secs_f64();
    outcome(c.passed && secs < 10.0, format!("{}; {secs:.2} s, cap 10 s", c.detail))
}

fn monotone_convergence(gemini: &vrte::Result<(AtmosphereScenario, Solution)>, secs: f64) -> Outcome {
    let (_, sol) = match gemini {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let r = &sol.report;
    let inc = r.trace_increasing();
    let dec = r.trace_decreasing();
    let up = inc.windows(2).all(|w| w[1] >= w[0] - SLACK);
    let down = dec.windows(2).all(|w| w[1] <= w[0] + SLACK);
    let agree = r
        .records
        .iter()
        .find(|x| (x.t_dec - x.t_inc).abs() < 5e-4 * x.t_inc)
        .map(|x| x.iteration);
    let at20 = r.records.iter().find(|x| x.iteration == 20.min(r.iterations));
    let gap20 = at20.map_or(f64::NAN, |x| (x.t_dec - x.t_inc) * TEMPERATURE_SCALE);
    let fast = agree.is_some_and(|i| i <= 20);
    outcome(
        up && down && fast && secs < 300.0,
        format!(
            "trace at z={}: nondecreasing {up}, nonincreasing {down}; 3 digits reached at iteration {}, gap at 20 is {gap20:.3} K; {secs:.1} s",
            r.trace_z,
            agree.map_or("never".into(), |i| i.to_string()),
        ),
    )
}

fn bracketing(gemini: &vrte::Result<(AtmosphereScenario, Solution)>, tol: f64) -> Outcome {
    let (_, sol) = match gemini {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let r = &sol.report;
    let lowest = r.records.iter().map(|x| x.bracket_min).fold(f64::INFINITY, f64::min);
    outcome(
        r.bracket_width < 2.0 * tol && lowest >= -SLACK,
        format!("final width {:.3e} vs gate {:.1e}; smallest gap over all iterations {lowest:.3e}", r.bracket_width, 2.0 * tol),
    )
}

fn mean_over(s: &AtmosphereScenario, t: &[f64], lo: f64, hi: f64) -> f64 {
    let v: Vec<f64> = s.z.iter().zip(t).filter(|(z, _)| **z > lo && **z < hi).map(|(_, t)| *t).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn cloud_effect() -> Outcome {
    match (run_named("case1_k05"), run_named("case1_eps")) {
        (Ok((s, flat)), Ok((_, cloud))) => {
            let a = mean_over(&s, flat.temperature(), 0.5, 0.7);
            let b = mean_over(&s, cloud.temperature(), 0.5, 0.7);
            outcome(b < a, format!("mean over the slab {:.3} C with cloud, {:.3} C without", to_c(b), to_c(a)))
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e.to_string()),
    }
}

fn to_c(t: f64) -> f64 {
    vrte::solver::to_celsius(t)
}

fn co2_effect() -> Outcome {
    let pair = |base: &str, co2: &str| -> vrte::Result<(AtmosphereScenario, Vec<f64>, Vec<f64>)> {
        let (s, a) = run_named(base)?;
        let (_, b) = run_named(co2)?;
        Ok((s, a.temperature().to_vec(), b.temperature().to_vec()))
    };
    let (c1, c2) = match (pair("case1", "case1_co2"), pair("case2", "case2_co2")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
    };
    let (s, t, t1) = c1;
    let ground = (t1[0] - t[0]) * TEMPERATURE_SCALE;
    let upper = s
        .z
        .iter()
        .enumerate()
        .filter(|(_, &z)| z > 0.5)
        .map(|(i, _)| (t1[i] - t[i]) * TEMPERATURE_SCALE)
        .fold(f64::NEG_INFINITY, f64::max);
    let case1 = ground > 0.0 && (0.1..=2.0).contains(&ground) && upper < 0.0;
    let (_, u, u1) = c2;
    let rise = u1.iter().zip(&u).map(|(a, b)| (a - b) * TEMPERATURE_SCALE).fold(f64::NEG_INFINITY, f64::max);
    let case2 = rise <= SLACK * TEMPERATURE_SCALE;
    outcome(
        case1 && case2,
        format!(
            "ground-heated: {ground:+.3} C at z=0 (gate 0.1..2), largest change above z=0.5 {upper:+.3} C; sun-heated: largest change {rise:+.3} C"
        ),
    )
}

fn thermal_closure(tol: f64) -> Outcome {
    let c = load("case1");
    let opts = SolveOptions {
        tol,
        max_iter: 400,
        ..c.solve_options()
    };
    match run_config(&c, &opts) {
        Ok((_, sol)) => {
            let (res, scale) = closure_residual(&sol.medium, &sol.upper.j0, &sol.upper.t);
            outcome(
                res < 1e-8 * scale,
                format!("relative residual {:.3e} after {} iterations at tol {tol:.0e}, gate 1e-8", res / scale, sol.report.iterations),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn isotropic_oracle() -> Outcome {
    let albedo = 0.3;
    let mut s = AtmosphereScenario::case1(KappaModel::Constant(0.5), RefractiveProfile::constant(1.0).expect("unit index"));
    s.beta = 0.0;
    s.albedo = AlbedoModel::Uniform(albedo);
    let opts = SolveOptions {
        tol: 1e-9,
        max_iter: 400,
        ..SolveOptions::default()
    };
    let sol = match solve(&s, &opts) {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let oracle = match IsotropicSlab::new(0.5, albedo, C_EARTH, T_EARTH).solve(1e-12, 2000) {
        Ok(x) => x,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (mut worst, mut at) = (0.0f64, 0.0);
    for (&z, &t) in s.z.iter().zip(sol.temperature()) {
        let want = oracle.at(z);
        let rel = ((t - want) / want).abs();
        if rel > worst {
            (worst, at) = (rel, z);
        }
    }
    outcome(
        worst < 0.01,
        format!("max relative difference {worst:.3e} at z={at:.3} ({} reference iterations), gate 1e-2", oracle.iterations),
    )
}

fn phase_matrix() -> Outcome {
    let cancel = verify::phase_cancellation();
    let mut ratios = Vec::new();
    for &(mu, mup) in &[(0.2, 0.9), (-0.7, 0.4), (0.5, 0.5), (1.0, -1.0), (0.33, -0.61), (0.05, 0.95)] {
        let avg = match azimuthal_average(mu, mup, 64) {
            Ok(m) => m,
            Err(e) => return outcome(false, e.to_string()),
        };
        let z = PhaseKind::Rayleigh.matrix(mu, mup);
        for a in 0..2 {
            for b in 0..2 {
                if z[a][b].abs() > 1e-3 {
                    ratios.push(avg[a][b] / z[a][b]);
                }
            }
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        cancel.passed && hi - lo < 1e-10,
        format!("{}; averaged block / reduced matrix = {lo:.12} (spread {:.1e} over {} entries)", cancel.detail, hi - lo, ratios.len()),
    )
}

fn determinism() -> Outcome {
    let c = load("case1_eps");
    let dirs: Vec<PathBuf> = (0..2)
        .map(|k| std::env::temp_dir().join(format!("vrte-acceptance-{}-{k}", std::process::id())))
        .collect();
    let mut written = Vec::new();
    for d in &dirs {
        match run_config(&c, &c.solve_options()).and_then(|(s, sol)| write_outputs(d, &c, &s, &sol)) {
            Ok(f) => written.push(f),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let same = |a: &Path, b: &Path| std::fs::read(a).ok().is_some_and(|x| Some(x) == std::fs::read(b).ok());
    let (a, b) = (&written[0], &written[1]);
    let files = [
        (&a.temperature, &b.temperature),
        (&a.spectra_ground, &b.spectra_ground),
        (&a.spectra_top, &b.spectra_top),
        (&a.convergence, &b.convergence),
        (&a.diagnostic, &b.diagnostic),
    ];
    let identical = files.iter().filter(|(x, y)| same(x, y)).count();
    for d in &dirs {
        let _ = std::fs::remove_dir_all(d);
    }
    let seq = SolveOptions {
        execution: Execution::Sequential,
        ..c.solve_options()
    };
    let threads = match (run_config(&c, &seq), run_config(&c, &c.solve_options())) {
        (Ok((_, x)), Ok((_, y))) => x.upper == y.upper && x.lower == y.lower,
        _ => false,
    };
    outcome(
        identical == files.len() && threads,
        format!("{identical}/{} tables byte-identical; sequential and parallel states equal: {threads}", files.len()),
    )
}

fn main() {
    let default_tol = SolveOptions::default().tol;
    let start = Instant::now();
    let gemini = run_named("case1");
    let gemini_secs = start.elapsed().as_secs_f64();

    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("kernel precision", Box::new(kernel_precision)),
        ("step refinement", Box::new(|| from_check(verify::refinement()))),
        ("monotone convergence", Box::new(|| monotone_convergence(&gemini, gemini_secs))),
        ("bracketing", Box::new(|| bracketing(&gemini, default_tol))),
        ("cloud effect", Box::new(cloud_effect)),
        ("co2 effect", Box::new(co2_effect)),
        ("attenuation bound", Box::new(|| from_check(verify::lemma_bound(1000, 11)))),
        ("admissibility propagation", Box::new(|| from_check(verify::propagation()))),
        ("thermal closure", Box::new(|| thermal_closure(1e-10))),
        ("isotropic oracle", Box::new(isotropic_oracle)),
        ("stefan", Box::new(|| from_check(verify::stefan()))),
        ("phase matrix", Box::new(phase_matrix)),
        ("determinism", Box::new(determinism)),
    ];

    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} {:>2} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, k + 1, o.detail);
        if !o.passed {
            failed.push(k + 1);
        }
    }
    println!("acceptance: {} of {} passed", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
