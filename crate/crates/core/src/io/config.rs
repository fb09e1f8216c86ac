use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::io::kappa::{Co2Modifier, KappaTable};
use crate::io::sha256_hex;
use crate::kernels::{AltitudeShape, QuadratureSpec, DEFAULT_DZ_INNER};
use crate::optics::RefractiveProfile;
use crate::par::Execution;
use crate::physics::FrequencyGrid;
use crate::solver::{
    from_celsius, AlbedoModel, AtmosphereScenario, Boundary, KappaModel, KernelMode, KernelSettings, SolveOptions,
    SourceForm, C_EARTH, C_SUN, TEMPERATURE_SCALE,
};

/// Which boundary drives the atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// Infrared emission from the ground.
    Case1,
    /// Sunlight entering at the top.
    Case2,
}

impl CaseKind {
    fn name(self) -> &'static str {
        match self {
            CaseKind::Case1 => "case1",
            CaseKind::Case2 => "case2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Constant(f64),
    /// Cloud slab with index bump `eps`.
    Slab(f64),
    /// Two-column `(z, n)` file.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum KappaSource {
    Constant(f64),
    /// Two-column `(wavelength um, kappa)` file.
    File(PathBuf),
}

/// Everything a run needs, as read from a flat `key = value` file.
///
/// Relative file paths are resolved against `base_dir`, the directory of
/// the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub case: CaseKind,
    pub nz: usize,
    pub nu_min: f64,
    pub nu_max: f64,
    pub nu_nodes: usize,
    pub profile: ProfileSpec,
    pub kappa: KappaSource,
    pub kappa_floor: f64,
    pub shape: AltitudeShape,
    pub co2: Option<Co2Modifier>,
    pub beta: f64,
    pub albedo: AlbedoModel,
    pub c_e: f64,
    pub ground_kelvin: f64,
    pub c_s: f64,
    pub sun_kelvin: f64,
    /// Solver settings; the hot start is kept separately in Celsius.
    pub solve: SolveOptions,
    pub hot_start_celsius: Option<f64>,
    pub output_dir: PathBuf,
    pub clamp_k0: bool,
    pub base_dir: PathBuf,
}

pub const NU_MIN: f64 = 0.002;
pub const NU_MAX: f64 = 20.0;
pub const NU_NODES: usize = 128;

impl RunConfig {
    /// Defaults for `case`, with no file paths.
    pub fn defaults(case: CaseKind) -> Self {
        let (c_e, c_s) = match case {
            CaseKind::Case1 => (C_EARTH, 0.0),
            CaseKind::Case2 => (0.0, C_SUN),
        };
        Self {
            case,
            nz: AtmosphereScenario::DEFAULT_NZ,
            nu_min: NU_MIN,
            nu_max: NU_MAX,
            nu_nodes: NU_NODES,
            profile: ProfileSpec::Slab(0.0),
            kappa: KappaSource::Constant(0.5),
            kappa_floor: KappaTable::DEFAULT_FLOOR,
            shape: AltitudeShape::Uniform,
            co2: None,
            beta: AtmosphereScenario::DEFAULT_BETA,
            albedo: AlbedoModel::default(),
            c_e,
            ground_kelvin: 300.0,
            c_s,
            sun_kelvin: 5700.0,
            solve: SolveOptions::default(),
            hot_start_celsius: None,
            output_dir: PathBuf::from("out"),
            clamp_k0: false,
            base_dir: PathBuf::from("."),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, path, &base)
    }

    /// Parse configuration text; `origin` names the source in error messages.
    pub fn parse(text: &str, origin: &Path, base_dir: &Path) -> Result<Self> {
        let mut keys = Keys::read(text, origin)?;
        let case = match keys.take("case") {
            None => return Err(Error::Config("missing key `case` (case1 or case2)".into())),
            Some((v, line)) => match v.as_str() {
                "case1" => CaseKind::Case1,
                "case2" => CaseKind::Case2,
                _ => return Err(keys.bad(line, "case", &v, "case1 or case2")),
            },
        };
        let mut c = Self::defaults(case);
        c.base_dir = base_dir.to_path_buf();

        c.nz = keys.num("grid.nz", c.nz)?;
        c.nu_min = keys.num("grid.nu_min", c.nu_min)?;
        c.nu_max = keys.num("grid.nu_max", c.nu_max)?;
        c.nu_nodes = keys.num("grid.nu_nodes", c.nu_nodes)?;

        c.profile = match keys.word("profile.kind", "slab", &["constant", "slab", "table"])?.as_str() {
            "constant" => ProfileSpec::Constant(keys.num("profile.n", 1.0)?),
            "table" => ProfileSpec::Table(keys.required("profile.path")?.into()),
            _ => ProfileSpec::Slab(keys.num("profile.eps", 0.0)?),
        };

        c.kappa = match keys.word("kappa.kind", "constant", &["constant", "file"])?.as_str() {
            "file" => KappaSource::File(keys.required("kappa.path")?.into()),
            _ => KappaSource::Constant(keys.num("kappa.value", 0.5)?),
        };
        c.kappa_floor = keys.num("kappa.floor", c.kappa_floor)?;
        c.shape = match keys.word("kappa.shape", "uniform", &["uniform", "linear"])?.as_str() {
            "linear" => AltitudeShape::Linear {
                slope: keys.num("kappa.slope", 0.5)?,
            },
            _ => AltitudeShape::Uniform,
        };

        if let Some(level) = keys.opt_num::<f64>("co2.level")? {
            let lo = keys.num("co2.band_min", Co2Modifier::BAND.0)?;
            let hi = keys.num("co2.band_max", Co2Modifier::BAND.1)?;
            c.co2 = Some(Co2Modifier::new(lo, hi, level)?);
        }

        c.beta = keys.num("scattering.beta", c.beta)?;
        c.albedo = match keys.word("scattering.albedo", "layered", &["layered", "uniform"])?.as_str() {
            "uniform" => AlbedoModel::Uniform(keys.num("scattering.value", 0.0)?),
            _ => {
                let AlbedoModel::Layered { a1, a2, z1, z2, nu1, nu2 } = AlbedoModel::default() else {
                    unreachable!()
                };
                AlbedoModel::Layered {
                    a1: keys.num("scattering.a1", a1)?,
                    a2: keys.num("scattering.a2", a2)?,
                    z1: keys.num("scattering.z1", z1)?,
                    z2: keys.num("scattering.z2", z2)?,
                    nu1: keys.num("scattering.nu1", nu1)?,
                    nu2: keys.num("scattering.nu2", nu2)?,
                }
            }
        };

        c.c_e = keys.num("boundary.c_e", c.c_e)?;
        c.ground_kelvin = keys.num("boundary.ground_kelvin", c.ground_kelvin)?;
        c.c_s = keys.num("boundary.c_s", c.c_s)?;
        c.sun_kelvin = keys.num("boundary.sun_kelvin", c.sun_kelvin)?;

        let q = QuadratureSpec::default();
        let quad = QuadratureSpec {
            delta_mu: keys.num("quadrature.delta_mu", q.delta_mu)?,
            mu_switch: keys.num("quadrature.mu_switch", q.mu_switch)?,
            ..q
        };
        let dz_inner = keys.num("quadrature.dz_inner", DEFAULT_DZ_INNER)?;

        let d = SolveOptions::default();
        c.solve = SolveOptions {
            tol: keys.num("solver.tol", d.tol)?,
            max_iter: keys.num("solver.max_iter", d.max_iter)?,
            kernels: KernelSettings {
                quad,
                dz_inner,
                mode: match keys.word("solver.kernel", "table", &["table", "direct"])?.as_str() {
                    "direct" => KernelMode::Direct,
                    _ => KernelMode::Table,
                },
                kappa_nodes: keys.num("solver.kappa_nodes", d.kernels.kappa_nodes)?,
            },
            hot_start: None,
            form: match keys.word("solver.sources", "stokes", &["stokes", "components"])?.as_str() {
                "components" => SourceForm::Components,
                _ => SourceForm::Stokes,
            },
            temperature_from_new: keys.flag("solver.temperature_from_new", d.temperature_from_new)?,
            trace_z: keys.num("solver.trace_z", d.trace_z)?,
            execution: if keys.flag("solver.parallel", true)? {
                Execution::Parallel
            } else {
                Execution::Sequential
            },
        };

        c.hot_start_celsius = match keys.take("solver.hot_start_celsius") {
            None => None,
            Some((v, _)) if v == "auto" => None,
            Some((v, line)) => Some(
                v.parse::<f64>()
                    .map_err(|_| keys.bad(line, "solver.hot_start_celsius", &v, "a number or `auto`"))?,
            ),
        };
        if let Some((v, _)) = keys.take("output.dir") {
            c.output_dir = v.into();
        }
        c.clamp_k0 = keys.flag("output.clamp_k0", false)?;

        keys.finish()?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.nz < 3 {
            return cfg(format!("grid.nz must be >= 3, got {}", self.nz));
        }
        if !(self.nu_min > 0.0 && self.nu_max > self.nu_min) || self.nu_nodes < 2 {
            return cfg("frequency grid needs 0 < nu_min < nu_max and at least 2 nodes".into());
        }
        if !(self.kappa_floor > 0.0) {
            return cfg(format!("kappa.floor must be > 0, got {}", self.kappa_floor));
        }
        if !(self.solve.tol > 0.0) || self.solve.max_iter == 0 {
            return cfg("solver.tol must be > 0 and solver.max_iter >= 1".into());
        }
        if self.solve.kernels.kappa_nodes < 2 {
            return cfg("solver.kappa_nodes must be >= 2".into());
        }
        if !(self.solve.kernels.dz_inner > 0.0) {
            return cfg("quadrature.dz_inner must be > 0".into());
        }
        if let Some(t) = self.hot_start_celsius {
            if !(from_celsius(t) > 0.0) || !t.is_finite() {
                return cfg("solver.hot_start_celsius must be above absolute zero".into());
            }
        }
        self.solve
            .kernels
            .quad
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.co2.is_some() && matches!(self.kappa, KappaSource::Constant(_)) {
            return cfg("co2.level needs a tabulated absorption (kappa.kind = file)".into());
        }
        Ok(())
    }

    /// Solver options with the hot start converted to scaled units.
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            hot_start: self.hot_start_celsius.map(from_celsius),
            ..self.solve
        }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// The output directory, resolved against the working directory.
    pub fn output_dir(&self) -> &Path {
        &self.output_dir
    }

    /// Load the absorption data, applying the floor and any CO2 band.
    pub fn kappa_model(&self) -> Result<KappaModel> {
        match &self.kappa {
            KappaSource::Constant(k) => Ok(KappaModel::Constant(*k)),
            KappaSource::File(p) => {
                let t = KappaTable::load(&self.resolve(p), self.kappa_floor)?;
                let t = match &self.co2 {
                    Some(m) => t.apply_co2(m)?,
                    None => t,
                };
                Ok(KappaModel::Spectrum(t))
            }
        }
    }

    pub fn refractive_profile(&self) -> Result<RefractiveProfile> {
        match &self.profile {
            ProfileSpec::Constant(n) => RefractiveProfile::constant(*n),
            ProfileSpec::Slab(eps) => RefractiveProfile::cloud_slab(*eps),
            ProfileSpec::Table(p) => RefractiveProfile::load_table(&self.resolve(p)),
        }
    }

    pub fn scenario(&self) -> Result<AtmosphereScenario> {
        let s = AtmosphereScenario {
            z: AtmosphereScenario::uniform_grid(self.nz),
            freq: FrequencyGrid::geometric(self.nu_min, self.nu_max, self.nu_nodes)?,
            profile: self.refractive_profile()?,
            kappa: self.kappa_model()?,
            shape: self.shape,
            beta: self.beta,
            albedo: self.albedo,
            boundary: Boundary {
                ground_intensity: self.c_e,
                ground_temperature: self.ground_kelvin / TEMPERATURE_SCALE,
                sun_intensity: self.c_s,
                sun_temperature: self.sun_kelvin / TEMPERATURE_SCALE,
                ..Boundary::case1()
            },
        };
        s.validate()?;
        Ok(s)
    }

    /// Replace the profile by a cloud slab with bump `eps`.
    pub fn set_eps(&mut self, eps: f64) -> Result<()> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("eps must be finite and >= 0, got {eps}")));
        }
        self.profile = ProfileSpec::Slab(eps);
        Ok(())
    }

    /// Add (or replace) the CO2 plateau, keeping a configured band.
    pub fn set_co2(&mut self, level: f64) -> Result<()> {
        let (lo, hi) = self.co2.map_or(Co2Modifier::BAND, |m| (m.band_min, m.band_max));
        self.co2 = Some(Co2Modifier::new(lo, hi, level)?);
        self.validate()
    }

    fn write_semantic(&self, out: &mut String) {
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("case", self.case.name().into());
        kv("grid.nz", self.nz.to_string());
        kv("grid.nu_min", self.nu_min.to_string());
        kv("grid.nu_max", self.nu_max.to_string());
        kv("grid.nu_nodes", self.nu_nodes.to_string());
        match &self.profile {
            ProfileSpec::Constant(n) => {
                kv("profile.kind", "constant".into());
                kv("profile.n", n.to_string());
            }
            ProfileSpec::Slab(eps) => {
                kv("profile.kind", "slab".into());
                kv("profile.eps", eps.to_string());
            }
            ProfileSpec::Table(p) => {
                kv("profile.kind", "table".into());
                kv("profile.path", p.display().to_string());
            }
        }
        match &self.kappa {
            KappaSource::Constant(k) => {
                kv("kappa.kind", "constant".into());
                kv("kappa.value", k.to_string());
            }
            KappaSource::File(p) => {
                kv("kappa.kind", "file".into());
                kv("kappa.path", p.display().to_string());
            }
        }
        kv("kappa.floor", self.kappa_floor.to_string());
        match self.shape {
            AltitudeShape::Uniform => kv("kappa.shape", "uniform".into()),
            AltitudeShape::Linear { slope } => {
                kv("kappa.shape", "linear".into());
                kv("kappa.slope", slope.to_string());
            }
        }
        if let Some(m) = &self.co2 {
            kv("co2.level", m.level.to_string());
            kv("co2.band_min", m.band_min.to_string());
            kv("co2.band_max", m.band_max.to_string());
        }
        kv("scattering.beta", self.beta.to_string());
        match self.albedo {
            AlbedoModel::Uniform(a) => {
                kv("scattering.albedo", "uniform".into());
                kv("scattering.value", a.to_string());
            }
            AlbedoModel::Layered { a1, a2, z1, z2, nu1, nu2 } => {
                kv("scattering.albedo", "layered".into());
                for (k, v) in [("a1", a1), ("a2", a2), ("z1", z1), ("z2", z2), ("nu1", nu1), ("nu2", nu2)] {
                    kv(&format!("scattering.{k}"), v.to_string());
                }
            }
        }
        kv("boundary.c_e", self.c_e.to_string());
        kv("boundary.ground_kelvin", self.ground_kelvin.to_string());
        kv("boundary.c_s", self.c_s.to_string());
        kv("boundary.sun_kelvin", self.sun_kelvin.to_string());
        let k = &self.solve.kernels;
        kv("quadrature.delta_mu", k.quad.delta_mu.to_string());
        kv("quadrature.mu_switch", k.quad.mu_switch.to_string());
        kv("quadrature.dz_inner", k.dz_inner.to_string());
        let s = &self.solve;
        kv("solver.tol", s.tol.to_string());
        kv("solver.max_iter", s.max_iter.to_string());
        kv(
            "solver.kernel",
            match k.mode {
                KernelMode::Table => "table",
                KernelMode::Direct => "direct",
            }
            .into(),
        );
        kv("solver.kappa_nodes", k.kappa_nodes.to_string());
        kv(
            "solver.hot_start_celsius",
            self.hot_start_celsius.map_or("auto".into(), |t| t.to_string()),
        );
        kv(
            "solver.sources",
            match s.form {
                SourceForm::Stokes => "stokes",
                SourceForm::Components => "components",
            }
            .into(),
        );
        kv("solver.temperature_from_new", s.temperature_from_new.to_string());
        kv("solver.trace_z", s.trace_z.to_string());
    }

    /// Canonical text form; parsing it gives back an equal configuration.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.write_semantic(&mut out);
        let _ = writeln!(out, "solver.parallel = {}", self.solve.execution == Execution::Parallel);
        let _ = writeln!(out, "output.dir = {}", self.output_dir.display());
        let _ = writeln!(out, "output.clamp_k0 = {}", self.clamp_k0);
        out
    }

    /// SHA-256 of the keys that affect the numbers (not output or threading).
    pub fn hash(&self) -> String {
        let mut out = String::new();
        self.write_semantic(&mut out);
        sha256_hex(out.as_bytes())
    }
}

/// Remaining `key = value` pairs with their line numbers.
struct Keys<'a> {
    origin: &'a Path,
    map: BTreeMap<String, (String, usize)>,
}

impl<'a> Keys<'a> {
    fn read(text: &str, origin: &'a Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                msg,
            };
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(format!("expected `key = value`, found {line:?}")));
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(err("empty key or value".into()));
            }
            if map.insert(k.to_string(), (v.to_string(), n + 1)).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        Ok(Self { origin, map })
    }

    fn bad(&self, line: usize, key: &str, value: &str, expect: &str) -> Error {
        Error::Parse {
            path: self.origin.to_path_buf(),
            line,
            msg: format!("`{key}`: expected {expect}, found {value:?}"),
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .map(|(v, _)| v)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    fn opt_num<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, line)) => v.parse().map(Some).map_err(|_| self.bad(line, key, &v, "a number")),
        }
    }

    fn num<T: FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        Ok(self.opt_num(key)?.unwrap_or(default))
    }

    fn flag(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => match v.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(self.bad(line, key, &v, "true or false")),
            },
        }
    }

    fn word(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String> {
        match self.take(key) {
            None => Ok(default.to_string()),
            Some((v, _)) if allowed.contains(&v.as_str()) => Ok(v),
            Some((v, line)) => Err(self.bad(line, key, &v, &allowed.join(" or "))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.map.iter().min_by_key(|(_, (_, line))| *line) {
            None => Ok(()),
            Some((k, (_, line))) => Err(Error::Parse {
                path: self.origin.to_path_buf(),
                line: *line,
                msg: format!("unknown key `{k}`"),
            }),
        }
    }
}
