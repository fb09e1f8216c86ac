use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::StokesField;
use crate::io::config::RunConfig;
use crate::io::kappa::wavelength_um;
use crate::solver::{closure_residual, to_celsius, AtmosphereScenario, IterationReport, KappaModel, Solution};

/// Lower limit applied to `K0` in spectra when clamping is on.
pub const K0_CLAMP: f64 = -2e-6;

/// Nine significant digits in scientific notation; missing values are `NaN`.
pub fn format_value(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.8e}")
    }
}

fn header(title: &str, hash: &str, columns: &[&str]) -> String {
    format!("# {title}\n# config_hash {hash}\n# {}\n", columns.join(" "))
}

fn row(out: &mut String, values: &[f64]) {
    let cells: Vec<String> = values.iter().map(|&v| format_value(v)).collect();
    let _ = writeln!(out, "{}", cells.join(" "));
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `z`, `T` (scaled), `T` in Celsius, and the lower branch in Celsius.
pub fn write_temperature(path: &Path, z: &[f64], solution: &Solution, hash: &str) -> Result<()> {
    let mut out = header("temperature versus altitude", hash, &["z", "T", "T_celsius", "T_lower_celsius"]);
    for (i, &zi) in z.iter().enumerate() {
        let (t, lo) = (solution.upper.t[i], solution.lower.t[i]);
        row(&mut out, &[zi, t, to_celsius(t), to_celsius(lo)]);
    }
    write_file(path, &out)
}

/// `J0` and `K0` against wavelength at altitude index `iz`, by increasing wavelength.
pub fn write_spectra(path: &Path, solution: &Solution, iz: usize, clamp_k0: bool, hash: &str) -> Result<()> {
    let st = solution.state();
    let m = &solution.medium;
    let title = format!(
        "spectra at altitude index {iz}{}",
        if clamp_k0 { ", K0 clamped below at -2e-6" } else { "" }
    );
    let mut out = header(&title, hash, &["wavelength_um", "nu", "J0", "K0", "J2", "K2"]);
    for f in (0..m.nf).rev() {
        let p = f * m.nz + iz;
        let k0 = if clamp_k0 { st.k0[p].max(K0_CLAMP) } else { st.k0[p] };
        row(&mut out, &[wavelength_um(m.nu[f]), m.nu[f], st.j0[p], k0, st.j2[p], st.k2[p]]);
    }
    write_file(path, &out)
}

/// Per iteration and branch: traced temperature, largest change, bracket width.
pub fn write_convergence(path: &Path, report: &IterationReport, hash: &str) -> Result<()> {
    let title = format!("convergence trace at z = {}", report.trace_z);
    let mut out = header(&title, hash, &["iteration", "branch", "T_trace", "T_trace_celsius", "max_dT", "bracket"]);
    for r in &report.records {
        for (branch, t, dt) in [(0.0, r.t_inc, r.max_dt_inc), (1.0, r.t_dec, r.max_dt_dec)] {
            let _ = write!(out, "{} {} ", r.iteration, if branch == 0.0 { "increasing" } else { "decreasing" });
            row(&mut out, &[t, to_celsius(t), dt, r.bracket]);
        }
    }
    write_file(path, &out)
}

/// Convergence diagnostics as `key value` lines.
pub fn write_diagnostic(path: &Path, scenario: &AtmosphereScenario, solution: &Solution, hash: &str) -> Result<()> {
    let r = &solution.report;
    let c = &r.contraction;
    let (res, scale) = closure_residual(&solution.medium, &solution.upper.j0, &solution.upper.t);
    let mut out = header("diagnostics", hash, &["key", "value"]);
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} {v}");
    };
    kv("profile", scenario.profile.describe().replace(' ', "_"));
    if let KappaModel::Spectrum(t) = &scenario.kappa {
        kv("kappa_floor", format_value(t.floor()));
        kv("kappa_floored_rows", t.floored_rows().to_string());
        if let Some(m) = t.co2() {
            kv("co2_level", format_value(m.level));
        }
    }
    kv("converged", r.converged.to_string());
    kv("iterations", r.iterations.to_string());
    kv("bracket_width", format_value(r.bracket_width));
    kv("hot_start_celsius", format_value(to_celsius(r.hot_start_temperature)));
    kv("hot_start_doublings", r.hot_start_doublings.to_string());
    kv("hot_start_verified", r.hot_start_verified.to_string());
    kv("monotone_increasing", r.monotone_increasing.to_string());
    kv("monotone_decreasing", r.monotone_decreasing.to_string());
    kv("j0_monotone_increasing", r.j0_monotone_increasing.to_string());
    kv("j0_monotone_decreasing", r.j0_monotone_decreasing.to_string());
    kv("bracketed", r.bracketed.to_string());
    kv("violations", r.violations.len().to_string());
    kv("closure_residual", format_value(res));
    kv("closure_scale", format_value(scale));
    kv("kappa_m", format_value(c.kappa_m));
    kv("kappa_M", format_value(c.kappa_big_m));
    kv("eps_M", format_value(c.eps_big_m));
    kv("albedo_m", format_value(c.a_m));
    kv("albedo_M", format_value(c.a_big_m));
    kv("beta_M", format_value(c.beta_big_m));
    kv("eta", format_value(c.eta_ratio));
    kv("R", format_value(c.r));
    kv("certifies_contraction", c.certifies().to_string());
    kv("bound", c.bound().map_or("none".into(), format_value));
    write_file(path, &out)
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub temperature: PathBuf,
    pub spectra_ground: PathBuf,
    pub spectra_top: PathBuf,
    pub convergence: PathBuf,
    pub diagnostic: PathBuf,
}

/// Write every result table of a solve into `dir`.
pub fn write_outputs(dir: &Path, config: &RunConfig, scenario: &AtmosphereScenario, solution: &Solution) -> Result<OutputFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let hash = config.hash();
    let files = OutputFiles {
        temperature: dir.join("temperature.txt"),
        spectra_ground: dir.join("spectra_z0.txt"),
        spectra_top: dir.join("spectra_zZ.txt"),
        convergence: dir.join("convergence.txt"),
        diagnostic: dir.join("diagnostic.txt"),
    };
    write_temperature(&files.temperature, &scenario.z, solution, &hash)?;
    write_spectra(&files.spectra_ground, solution, 0, config.clamp_k0, &hash)?;
    write_spectra(&files.spectra_top, solution, scenario.z.len() - 1, config.clamp_k0, &hash)?;
    write_convergence(&files.convergence, &solution.report, &hash)?;
    write_diagnostic(&files.diagnostic, scenario, solution, &hash)?;
    Ok(files)
}

/// Which Stokes component a surface holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceChannel {
    Intensity,
    Polarization,
}

/// `z mu value` triples, one block per altitude separated by blank lines.
/// Forbidden directions are written as `NaN`.
pub fn write_surface(path: &Path, field: &StokesField, channel: SurfaceChannel, hash: &str) -> Result<()> {
    let name = match channel {
        SurfaceChannel::Intensity => "I",
        SurfaceChannel::Polarization => "Q",
    };
    let title = format!("{name}(z, mu) at nu = {}", field.nu);
    let mut out = header(&title, hash, &["z", "mu", name]);
    for (iz, &z) in field.z.iter().enumerate() {
        if iz > 0 {
            out.push('\n');
        }
        for (im, &mu) in field.mu().iter().enumerate() {
            let v = match channel {
                SurfaceChannel::Intensity => field.intensity(iz, im),
                SurfaceChannel::Polarization => field.polarization(iz, im),
            };
            row(&mut out, &[z, mu, v.unwrap_or(f64::NAN)]);
        }
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_value(1.0), "1.00000000e0");
        assert_eq!(format_value(-2.5e-6), "-2.50000000e-6");
        assert_eq!(format_value(f64::NAN), "NaN");
        assert_eq!(format_value(0.1436), "1.43600000e-1");
    }
}
