use std::f64::consts::PI;

use crate::kernels::c1;
use crate::solver::scenario::AtmosphereScenario;

/// The explicit constants of the geometric convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionDiagnostic {
    pub kappa_m: f64,
    pub kappa_big_m: f64,
    pub eps_big_m: f64,
    pub a_m: f64,
    pub a_big_m: f64,
    pub beta_big_m: f64,
    pub z_top: f64,
    pub eta_ratio: f64,
    pub r: f64,
}

impl ContractionDiagnostic {
    /// True when the estimate certifies geometric convergence.
    pub fn certifies(&self) -> bool {
        self.eta_ratio < 1.0
    }

    /// Bound `R Z / (1 - eta)` on the iterates, when `eta < 1`.
    pub fn bound(&self) -> Option<f64> {
        self.certifies().then(|| self.r * self.z_top / (1.0 - self.eta_ratio))
    }

    pub fn from_extremes(kappa_m: f64, kappa_big_m: f64, eps_big_m: f64, a_m: f64, a_big_m: f64, beta: f64, z_top: f64, c_e: f64, t_e: f64) -> Self {
        let eta_ratio = (1.0 + eps_big_m) * (kappa_big_m * kappa_big_m / kappa_m) * c1(z_top * kappa_m / (1.0 + eps_big_m)) * ((1.0 - a_m) / (1.0 - a_big_m)) * (1.0 + beta * a_big_m);
        let r = c_e / 4.0 * kappa_big_m * (1.0 - a_m) * PI.powi(4) / 15.0 * t_e.powi(4);
        Self {
            kappa_m,
            kappa_big_m,
            eps_big_m,
            a_m,
            a_big_m,
            beta_big_m: beta,
            z_top,
            eta_ratio,
            r,
        }
    }
}

/// Evaluate the contraction constants over the scenario's grids.
pub fn contraction_ratio(s: &AtmosphereScenario) -> ContractionDiagnostic {
    let (mut kmin, mut kmax) = (f64::INFINITY, 0.0f64);
    let (mut amin, mut amax) = (f64::INFINITY, 0.0f64);
    for &nu in s.freq.nodes() {
        let k = s.kappa.kappa_nu(nu);
        for &z in &s.z {
            let kz = k * s.shape.value(z);
            kmin = kmin.min(kz);
            kmax = kmax.max(kz);
            let a = s.albedo.value(nu, z);
            amin = amin.min(a);
            amax = amax.max(a);
        }
    }
    let n: Vec<f64> = s.z.iter().map(|&z| s.profile.n(z)).collect();
    let nmax = n.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let nmin = n.iter().cloned().fold(f64::INFINITY, f64::min);
    let b = &s.boundary;
    ContractionDiagnostic::from_extremes(kmin, kmax, nmax / nmin - 1.0, amin, amax, s.beta, s.z_top(), b.ground_intensity, b.ground_temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::RefractiveProfile;
    use crate::solver::scenario::{AlbedoModel, KappaModel};

    #[test]
    fn homogeneous_specialization() {
        let mut s = AtmosphereScenario::case1(KappaModel::Constant(0.8), RefractiveProfile::constant(1.0).unwrap());
        s.albedo = AlbedoModel::Uniform(0.3);
        let d = contraction_ratio(&s);
        let expect = 0.8 * c1(0.8) * (1.0 + 0.5 * 0.3);
        assert!((d.eta_ratio - expect).abs() < 1e-14);
    }

    #[test]
    fn small_absorption_contracts() {
        let s = AtmosphereScenario::case1(KappaModel::Constant(1e-3), RefractiveProfile::cloud_slab(0.01).unwrap());
        let d = contraction_ratio(&s);
        assert!(d.eta_ratio < 1e-3, "{}", d.eta_ratio);
        assert!(d.certifies());
        assert!(d.bound().unwrap() > 0.0);
    }
}
