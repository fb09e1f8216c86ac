use crate::error::{Error, Result};
use crate::io::KappaTable;
use crate::kernels::AltitudeShape;
use crate::optics::RefractiveProfile;
use crate::physics::{FrequencyGrid, Polarization};

/// Temperatures are measured in units of 4798 K.
pub const TEMPERATURE_SCALE: f64 = 4798.0;
/// Ground temperature, 300 K.
pub const T_EARTH: f64 = 300.0 / TEMPERATURE_SCALE;
/// Sun temperature, 5700 K.
pub const T_SUN: f64 = 5700.0 / TEMPERATURE_SCALE;
pub const C_EARTH: f64 = 2.5;
pub const C_SUN: f64 = 2e-5;

pub fn to_celsius(t: f64) -> f64 {
    t * TEMPERATURE_SCALE - 273.15
}

pub fn from_celsius(c: f64) -> f64 {
    (c + 273.15) / TEMPERATURE_SCALE
}

/// Sources entering through the ground (`z = 0`) and the top (`z = Z`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub ground_intensity: f64,
    pub ground_temperature: f64,
    pub sun_intensity: f64,
    pub sun_temperature: f64,
    pub ground_polarization: Polarization,
    pub sun_polarization: Polarization,
}

impl Boundary {
    /// Infrared emission from the ground, no sun.
    pub fn case1() -> Self {
        Self {
            ground_intensity: C_EARTH,
            ground_temperature: T_EARTH,
            sun_intensity: 0.0,
            sun_temperature: T_SUN,
            ground_polarization: Polarization::Unpolarized,
            sun_polarization: Polarization::Unpolarized,
        }
    }

    /// Sunlight entering at the top, no ground emission.
    pub fn case2() -> Self {
        Self {
            ground_intensity: 0.0,
            sun_intensity: C_SUN,
            ..Self::case1()
        }
    }

    pub fn none() -> Self {
        Self {
            ground_intensity: 0.0,
            sun_intensity: 0.0,
            ..Self::case1()
        }
    }
}

/// Frequency dependence `kappa_nu` of the absorption.
#[derive(Debug, Clone, PartialEq)]
pub enum KappaModel {
    Constant(f64),
    /// Tabulated against wavelength, `lambda [um] = 3 / nu`.
    Spectrum(KappaTable),
}

impl KappaModel {
    pub fn kappa_nu(&self, nu: f64) -> f64 {
        match self {
            KappaModel::Constant(k) => *k,
            KappaModel::Spectrum(t) => t.at_frequency(nu),
        }
    }
}

/// Single-scattering albedo `a_s(nu, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlbedoModel {
    Uniform(f64),
    /// `a1 1_{z in (z1,z2)} + a2 1_{z > z2} 1_{nu in (nu1,nu2)} (nu/nu2)^4`
    Layered {
        a1: f64,
        a2: f64,
        z1: f64,
        z2: f64,
        nu1: f64,
        nu2: f64,
    },
}

impl Default for AlbedoModel {
    fn default() -> Self {
        AlbedoModel::Layered {
            a1: 0.7,
            a2: 0.3,
            z1: 0.4,
            z2: 0.8,
            nu1: 0.6,
            nu2: 1.5,
        }
    }
}

impl AlbedoModel {
    pub fn value(&self, nu: f64, z: f64) -> f64 {
        match *self {
            AlbedoModel::Uniform(a) => a,
            AlbedoModel::Layered { a1, a2, z1, z2, nu1, nu2 } => {
                let mut a = 0.0;
                if z > z1 && z < z2 {
                    a += a1;
                }
                if z > z2 && nu > nu1 && nu < nu2 {
                    a += a2 * (nu / nu2).powi(4);
                }
                a
            }
        }
    }
}

/// Everything that defines one radiative equilibrium problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AtmosphereScenario {
    pub z: Vec<f64>,
    pub freq: FrequencyGrid,
    pub profile: RefractiveProfile,
    pub kappa: KappaModel,
    pub shape: AltitudeShape,
    pub beta: f64,
    pub albedo: AlbedoModel,
    pub boundary: Boundary,
}

impl AtmosphereScenario {
    pub const DEFAULT_NZ: usize = 100;
    pub const DEFAULT_BETA: f64 = 0.5;

    /// `n` equispaced altitudes on `[0, 1]`.
    pub fn uniform_grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    /// Ground-heated atmosphere with the default grids and scattering.
    pub fn case1(kappa: KappaModel, profile: RefractiveProfile) -> Self {
        Self {
            z: Self::uniform_grid(Self::DEFAULT_NZ),
            freq: FrequencyGrid::default(),
            profile,
            kappa,
            shape: AltitudeShape::Uniform,
            beta: Self::DEFAULT_BETA,
            albedo: AlbedoModel::default(),
            boundary: Boundary::case1(),
        }
    }

    /// Sun-heated atmosphere with the default grids and scattering.
    pub fn case2(kappa: KappaModel, profile: RefractiveProfile) -> Self {
        Self {
            boundary: Boundary::case2(),
            ..Self::case1(kappa, profile)
        }
    }

    pub fn z_top(&self) -> f64 {
        self.z[self.z.len() - 1]
    }

    pub fn validate(&self) -> Result<()> {
        if self.z.len() < 2 || self.z.windows(2).any(|w| !(w[1] > w[0])) || self.z[0] != 0.0 {
            return Err(Error::Config("altitude grid must start at 0 and increase strictly".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0,1], got {}", self.beta)));
        }
        let b = &self.boundary;
        for (name, v) in [
            ("ground intensity", b.ground_intensity),
            ("ground temperature", b.ground_temperature),
            ("sun intensity", b.sun_intensity),
            ("sun temperature", b.sun_temperature),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for &nu in self.freq.nodes() {
            let k = self.kappa.kappa_nu(nu);
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Config(format!("absorption must be > 0, got {k} at nu={nu}")));
            }
            for &z in &self.z {
                let a = self.albedo.value(nu, z);
                if !(0.0..1.0).contains(&a) {
                    return Err(Error::Config(format!("albedo must lie in [0,1), got {a} at nu={nu}, z={z}")));
                }
                if !(self.shape.value(z) > 0.0) {
                    return Err(Error::Config(format!("absorption shape must be > 0 at z={z}")));
                }
            }
        }
        Ok(())
    }

    /// Extreme values of `kappa_nu` over the frequency grid.
    pub fn kappa_nu_range(&self) -> (f64, f64) {
        self.freq
            .nodes()
            .iter()
            .map(|&nu| self.kappa.kappa_nu(nu))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| (lo.min(k), hi.max(k)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_albedo_matches_layout() {
        let a = AlbedoModel::default();
        assert_eq!(a.value(0.1, 0.5), 0.7);
        assert_eq!(a.value(0.1, 0.2), 0.0);
        assert_eq!(a.value(0.1, 0.9), 0.0);
        assert!((a.value(1.5 / 2.0, 0.9) - 0.3 / 16.0).abs() < 1e-15);
        assert_eq!(a.value(1.6, 0.9), 0.0);
    }

    #[test]
    fn temperature_units() {
        assert!((to_celsius(T_EARTH) - 26.85).abs() < 1e-12);
        assert!((from_celsius(180.0) - 453.15 / 4798.0).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_input() {
        let p = RefractiveProfile::constant(1.0).unwrap();
        let s = AtmosphereScenario::case1(KappaModel::Constant(0.5), p.clone());
        assert!(s.validate().is_ok());
        assert!(AtmosphereScenario { beta: 1.5, ..s.clone() }.validate().is_err());
        assert!(AtmosphereScenario { kappa: KappaModel::Constant(0.0), ..s.clone() }.validate().is_err());
        assert!(AtmosphereScenario { albedo: AlbedoModel::Uniform(1.0), ..s }.validate().is_err());
    }
}
