use std::time::Instant;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::physics::assert_uv_zero;
use crate::solver::contraction::{contraction_ratio, ContractionDiagnostic};
use crate::solver::newton::newton_temperature;
use crate::solver::scenario::AtmosphereScenario;
use crate::solver::state::{Medium, RadiationState};
use crate::solver::transport::{update_moments, KernelSettings, SourceForm, Transport};

/// Slack allowed in every monotonicity and ordering check.
pub const MONOTONE_SLACK: f64 = 1e-10;
const MAX_HOT_DOUBLINGS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Stop when `max_z |T^{m+1} - T^m| < tol` on both branches and the
    /// branches are less than `2 tol` apart.
    pub tol: f64,
    pub max_iter: usize,
    pub kernels: KernelSettings,
    /// Hot-start temperature; `None` picks one from the boundary data.
    pub hot_start: Option<f64>,
    pub form: SourceForm,
    /// Update `T^{m+1}` from the new moments instead of the previous ones.
    pub temperature_from_new: bool,
    /// Altitude whose temperature is traced per iteration.
    pub trace_z: f64,
    pub execution: Execution,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 60,
            kernels: KernelSettings::default(),
            hot_start: None,
            form: SourceForm::Stokes,
            temperature_from_new: false,
            trace_z: 0.03,
            execution: Execution::default(),
        }
    }
}

/// `1.5 max(T_E, T_S c_S^(1/4))`.
pub fn default_hot_start(s: &AtmosphereScenario) -> f64 {
    let b = &s.boundary;
    let ground = if b.ground_intensity > 0.0 { b.ground_temperature } else { 0.0 };
    let sun = b.sun_temperature * b.sun_intensity.powf(0.25);
    let t = 1.5 * ground.max(sun);
    if t > 0.0 {
        t
    } else {
        1.5 * b.ground_temperature
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub t_inc: f64,
    pub t_dec: f64,
    pub max_dt_inc: f64,
    pub max_dt_dec: f64,
    /// `max_z (T_dec - T_inc)`
    pub bracket: f64,
    /// `min_z (T_dec - T_inc)`
    pub bracket_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timings {
    pub geometry: f64,
    pub table: f64,
    pub iterations: f64,
}

/// Everything recorded while iterating both branches.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub trace_z: f64,
    pub trace_index: usize,
    pub records: Vec<IterationRecord>,
    pub monotone_increasing: bool,
    pub monotone_decreasing: bool,
    pub j0_monotone_increasing: bool,
    pub j0_monotone_decreasing: bool,
    pub bracketed: bool,
    /// Human readable description of the first few violations.
    pub violations: Vec<String>,
    pub hot_start_temperature: f64,
    pub hot_start_doublings: usize,
    pub hot_start_verified: bool,
    pub converged: bool,
    pub iterations: usize,
    pub bracket_width: f64,
    pub contraction: ContractionDiagnostic,
    pub timings: Timings,
}

impl IterationReport {
    fn flag(&mut self, msg: String) {
        if self.violations.len() < 20 {
            self.violations.push(msg);
        }
    }

    pub fn trace_increasing(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t_inc).collect()
    }

    pub fn trace_decreasing(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t_dec).collect()
    }
}

/// Converged bracket: the decreasing branch is the reported solution.
#[derive(Debug, Clone)]
pub struct Solution {
    pub upper: RadiationState,
    pub lower: RadiationState,
    pub report: IterationReport,
    pub medium: Medium,
}

impl Solution {
    pub fn state(&self) -> &RadiationState {
        &self.upper
    }

    pub fn temperature(&self) -> &[f64] {
        &self.upper.t
    }
}

/// One application of the iteration map: moments from `(T^m, J^m)`,
/// temperature from `J^m` (or from `J^{m+1}` when asked).
pub fn iterate(state: &RadiationState, medium: &Medium, transport: &Transport, opts: &SolveOptions) -> Result<RadiationState> {
    let m = update_moments(state, medium, transport, opts.form, opts.execution);
    let source = if opts.temperature_from_new { &m.j0 } else { &state.j0 };
    let t = newton_temperature(medium, source, &state.t, opts.execution)?;
    Ok(RadiationState {
        nz: state.nz,
        nf: state.nf,
        j0: m.j0,
        j2: m.j2,
        k0: m.k0,
        k2: m.k2,
        t,
        iteration: state.iteration + 1,
        direction: state.direction,
    })
}

fn hot_start(medium: &Medium, transport: &Transport, opts: &SolveOptions, t0: f64) -> (RadiationState, f64, usize, bool) {
    let mut t = t0;
    for d in 0..=MAX_HOT_DOUBLINGS {
        let st = RadiationState::hot(medium, t);
        let next = update_moments(&st, medium, transport, opts.form, opts.execution);
        let ok = next.j0.iter().zip(&st.j0).all(|(a, b)| *a <= *b * (1.0 + 1e-12));
        if ok || d == MAX_HOT_DOUBLINGS {
            return (st, t, d, ok);
        }
        t *= 2.0;
    }
    unreachable!()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Run the increasing (cold start) and decreasing (hot start) branches
/// until both have settled, with a prebuilt transport.
pub fn solve_with(scenario: &AtmosphereScenario, medium: &Medium, transport: &Transport, opts: &SolveOptions) -> Result<Solution> {
    assert_uv_zero(&scenario.boundary)?;
    let started = Instant::now();
    let trace_index = scenario
        .z
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - opts.trace_z).abs().total_cmp(&(b.1 - opts.trace_z).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let t0 = opts.hot_start.unwrap_or_else(|| default_hot_start(scenario));
    let (mut hot, t0, doublings, verified) = hot_start(medium, transport, opts, t0);
    let mut cold = RadiationState::cold(medium);
    let mut report = IterationReport {
        trace_z: scenario.z[trace_index],
        trace_index,
        records: vec![IterationRecord {
            iteration: 0,
            t_inc: cold.t[trace_index],
            t_dec: hot.t[trace_index],
            max_dt_inc: f64::NAN,
            max_dt_dec: f64::NAN,
            bracket: t0,
            bracket_min: t0,
        }],
        monotone_increasing: true,
        monotone_decreasing: true,
        j0_monotone_increasing: true,
        j0_monotone_decreasing: true,
        bracketed: true,
        violations: Vec::new(),
        hot_start_temperature: t0,
        hot_start_doublings: doublings,
        hot_start_verified: verified,
        converged: false,
        iterations: 0,
        bracket_width: t0,
        contraction: contraction_ratio(scenario),
        timings: Timings {
            geometry: transport.geometry_seconds,
            table: transport.table_seconds,
            iterations: 0.0,
        },
    };

    for m in 1..=opts.max_iter {
        let c = iterate(&cold, medium, transport, opts)?;
        let h = iterate(&hot, medium, transport, opts)?;
        let j_scale = h.j0.iter().cloned().fold(0.0, f64::max).max(1e-300);
        for i in 0..medium.nz {
            if c.t[i] < cold.t[i] - MONOTONE_SLACK {
                report.monotone_increasing = false;
                report.flag(format!("iteration {m}: increasing branch T dropped at z index {i} by {:e}", cold.t[i] - c.t[i]));
            }
            if h.t[i] > hot.t[i] + MONOTONE_SLACK {
                report.monotone_decreasing = false;
                report.flag(format!("iteration {m}: decreasing branch T rose at z index {i} by {:e}", h.t[i] - hot.t[i]));
            }
            if h.t[i] < c.t[i] - MONOTONE_SLACK {
                report.bracketed = false;
                report.flag(format!("iteration {m}: branches crossed at z index {i} by {:e}", c.t[i] - h.t[i]));
            }
        }
        let slack = MONOTONE_SLACK * j_scale;
        if c.j0.iter().zip(&cold.j0).any(|(a, b)| *a < *b - slack) {
            report.j0_monotone_increasing = false;
        }
        if h.j0.iter().zip(&hot.j0).any(|(a, b)| *a > *b + slack) {
            report.j0_monotone_decreasing = false;
        }
        let (dti, dtd) = (max_abs_diff(&c.t, &cold.t), max_abs_diff(&h.t, &hot.t));
        let gaps = h.t.iter().zip(&c.t).map(|(a, b)| a - b);
        let (gmax, gmin) = gaps.fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), g| (hi.max(g), lo.min(g)));
        report.records.push(IterationRecord {
            iteration: m,
            t_inc: c.t[trace_index],
            t_dec: h.t[trace_index],
            max_dt_inc: dti,
            max_dt_dec: dtd,
            bracket: gmax,
            bracket_min: gmin,
        });
        report.iterations = m;
        report.bracket_width = gmax;
        cold = c;
        hot = h;
        if m >= 2 && dti < opts.tol && dtd < opts.tol && gmax < 2.0 * opts.tol {
            report.converged = true;
            break;
        }
    }
    report.timings.iterations = started.elapsed().as_secs_f64();
    if !report.converged {
        return Err(Error::NotConverged {
            iterations: report.iterations,
            bracket: report.bracket_width,
            report: Box::new(report),
        });
    }
    Ok(Solution {
        upper: hot,
        lower: cold,
        report,
        medium: medium.clone(),
    })
}

/// Build the medium and transport for `scenario` and run [`solve_with`].
pub fn solve(scenario: &AtmosphereScenario, opts: &SolveOptions) -> Result<Solution> {
    let medium = Medium::new(scenario)?;
    let transport = Transport::build(scenario, &medium, &opts.kernels, opts.execution)?;
    solve_with(scenario, &medium, &transport, opts)
}
