use crate::error::{Error, Result};
use crate::kernels::expint::expint_unchecked;
use crate::kernels::quadrature::QuadratureSpec;
use crate::optics::{admissibility, eta_sq, RefractiveProfile};

/// Default step of the inner (optical depth) integral.
pub const DEFAULT_DZ_INNER: f64 = 1.0 / 60.0;

/// Orders of the generalized exponential integrals used by the solver.
pub const ORDERS: [u32; 3] = [1, 3, 5];

/// Position of `k` in [`ORDERS`].
pub fn order_index(k: u32) -> Result<usize> {
    ORDERS
        .iter()
        .position(|&o| o == k)
        .ok_or_else(|| Error::Unsupported(format!("kernel order {k}; only 1, 3 and 5 are available")))
}

/// Altitude dependence of the absorption, `kappa(nu, z) = kappa_nu * shape(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AltitudeShape {
    #[default]
    Uniform,
    /// `1 - slope * z`
    Linear { slope: f64 },
}

impl AltitudeShape {
    /// `1 - z/2`, the profile of the kernel precision study.
    pub const PRECISION_STUDY: AltitudeShape = AltitudeShape::Linear { slope: 0.5 };

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            AltitudeShape::Uniform => 1.0,
            AltitudeShape::Linear { slope } => 1.0 - slope * z,
        }
    }

    /// `int_a^b shape`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            AltitudeShape::Uniform => b - a,
            AltitudeShape::Linear { slope } => (b - a) - 0.5 * slope * (b * b - a * a),
        }
    }

    /// Extreme values over `[0, z_top]`.
    pub fn range(&self, z_top: f64) -> (f64, f64) {
        let (a, b) = (self.value(0.0), self.value(z_top));
        (a.min(b), a.max(b))
    }
}

/// A straight segment `z -> z'` of a characteristic, with its absorption.
#[derive(Debug, Clone, Copy)]
pub struct OpticalPath<'a> {
    pub z: f64,
    pub zp: f64,
    pub kappa_nu: f64,
    pub shape: AltitudeShape,
    pub profile: &'a RefractiveProfile,
    pub dz_inner: f64,
}

impl<'a> OpticalPath<'a> {
    pub fn new(z: f64, zp: f64, kappa_nu: f64, shape: AltitudeShape, profile: &'a RefractiveProfile) -> Self {
        Self {
            z,
            zp,
            kappa_nu,
            shape,
            profile,
            dz_inner: DEFAULT_DZ_INNER,
        }
    }

    pub fn with_step(self, dz_inner: f64) -> Self {
        Self { dz_inner, ..self }
    }

    fn cells(&self) -> (usize, f64) {
        let len = (self.zp - self.z).abs();
        if len == 0.0 {
            return (0, 0.0);
        }
        let m = ((len / self.dz_inner - 1e-9).ceil() as usize).max(1);
        (m, (self.zp - self.z) / m as f64)
    }

    /// Midpoint rule for `int shape(z'') g(n(z'')) dz''` along the segment.
    fn midpoint(&self, mut g: impl FnMut(f64) -> Option<f64>) -> Option<f64> {
        let (m, dz) = self.cells();
        let mut acc = 0.0;
        for s in 0..m {
            let zm = self.z + (s as f64 + 0.5) * dz;
            acc += self.shape.value(zm) * g(self.profile.n(zm))?;
        }
        Some(acc * dz.abs())
    }

    /// `int shape / eta dz''` for the ray leaving `z` with cosine `|mu|`, or
    /// `None` if it is totally refracted on the way.
    pub fn depth(&self, mu: f64) -> Option<f64> {
        let nz = self.profile.n(self.z);
        self.midpoint(|n| {
            let s = eta_sq(mu, nz, n);
            (s > 0.0).then(|| 1.0 / s.sqrt())
        })
    }

    /// `int shape * n_z / n(z'') dz''`, the depth seen by the linearized transport.
    pub fn depth_linearized(&self) -> f64 {
        let nz = self.profile.n(self.z);
        self.midpoint(|n| Some(nz / n)).unwrap_or(0.0)
    }
}

/// Attenuation `exp(-|int kappa / eta dz''|)` along the path.
pub fn phi(path: &OpticalPath, mu: f64) -> Result<f64> {
    let m = mu.abs();
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::ForbiddenRay { mu, z: path.z });
    }
    match path.depth(m) {
        Some(d) => Ok((-path.kappa_nu * d).exp()),
        None => Err(Error::ForbiddenRay { mu, z: path.z }),
    }
}

/// Check `phi <= exp(-(1/mu) int kappa / (1 + eps(z'', z)) dz'')` with
/// `eps(s, z) = max(1, n_s/n_z) - 1`, to `1e-12`.
pub fn phi_bound_check(path: &OpticalPath, mu: f64) -> bool {
    let m = mu.abs();
    let Ok(value) = phi(path, m) else {
        return false;
    };
    let nz = path.profile.n(path.z);
    let depth = path
        .midpoint(|n| Some(1.0 / (n / nz).max(1.0)))
        .unwrap_or(0.0);
    let bound = (-path.kappa_nu * depth / m).exp();
    value <= bound + 1e-12
}

/// Value of `E_k(kappa; z, z)`: the angular integral with no attenuation.
pub(crate) fn diagonal_point(kidx: usize, mu_lo: f64) -> f64 {
    match kidx {
        0 => {
            if mu_lo > 0.0 {
                -mu_lo.ln()
            } else {
                f64::INFINITY
            }
        }
        1 => 0.5 * (1.0 - mu_lo * mu_lo),
        _ => 0.25 * (1.0 - mu_lo.powi(4)),
    }
}

/// `eta^(k-2)` for the three kernel orders.
#[inline]
pub(crate) fn eta_powers(e: f64) -> [f64; 3] {
    [1.0 / e, e, e * e * e]
}

/// Generalized exponential integral
/// `E_k(kappa; z, z') = int_{mu*}^1 phi(mu) eta(mu, z, z')^(k-2) dmu`
/// over the directions admissible at `z`.
pub fn ek_general(k: u32, path: &OpticalPath, quad: &QuadratureSpec) -> Result<f64> {
    let kidx = order_index(k)?;
    let cone = admissibility(path.z, path.profile);
    if path.z == path.zp {
        return Ok(diagonal_point(kidx, cone.mu_hi));
    }
    let (nz, nzp) = (path.profile.n(path.z), path.profile.n(path.zp));
    let mut acc = 0.0;
    for node in quad.nodes(cone.mu_hi) {
        let s = eta_sq(node.mu, nz, nzp);
        if s <= 0.0 {
            continue;
        }
        if let Some(d) = path.depth(node.mu) {
            acc += node.weight * (-path.kappa_nu * d).exp() * eta_powers(s.sqrt())[kidx];
        }
    }
    Ok(acc)
}

/// Fast approximation `(n_z'/n_z)^(k-2) E_k(kappa int shape n_z/n dz'')`,
/// only offered for `k = 3, 5`.
pub fn ek_approx(k: u32, path: &OpticalPath) -> Result<f64> {
    if k == 1 {
        return Err(Error::Unsupported(
            "the linearized transport is too coarse for E_1; use ek_general".into(),
        ));
    }
    order_index(k)?;
    let ratio = path.profile.n(path.zp) / path.profile.n(path.z);
    let x = path.kappa_nu * path.depth_linearized();
    Ok(ratio.powi(k as i32 - 2) * expint_unchecked(k, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::expint;
    use approx::assert_relative_eq;

    fn flat() -> RefractiveProfile {
        RefractiveProfile::constant(1.0).unwrap()
    }

    #[test]
    fn phi_examples() {
        let p = flat();
        let zero = OpticalPath::new(0.1, 0.9, 0.0, AltitudeShape::Uniform, &p);
        assert_eq!(phi(&zero, 0.3).unwrap(), 1.0);
        let path = OpticalPath::new(0.2, 0.6, 0.5, AltitudeShape::Uniform, &p);
        assert_relative_eq!(phi(&path, 0.5).unwrap(), (-0.4f64).exp(), max_relative = 1e-13);
        assert!(phi(&path, 0.0).is_err());
    }

    #[test]
    fn phi_step_refinement_on_cloud() {
        let p = RefractiveProfile::cloud_slab(0.01).unwrap();
        let path = OpticalPath::new(0.0, 1.0, 0.5, AltitudeShape::Uniform, &p);
        let coarse = phi(&path, 0.6).unwrap();
        let fine = phi(&path.with_step(DEFAULT_DZ_INNER / 16.0), 0.6).unwrap();
        assert!((coarse - fine).abs() < 1e-6, "{coarse} vs {fine}");
    }

    #[test]
    fn forbidden_ray_is_an_error() {
        let p = RefractiveProfile::cloud_slab(0.01).unwrap();
        let path = OpticalPath::new(0.6, 0.9, 0.5, AltitudeShape::Uniform, &p);
        assert!(matches!(phi(&path, 0.019f64.sqrt()), Err(Error::ForbiddenRay { .. })));
    }

    #[test]
    fn bound_check_trivial_cases() {
        let p = flat();
        let path = OpticalPath::new(0.0, 0.7, 0.8, AltitudeShape::Uniform, &p);
        for mu in [0.05, 0.3, 1.0] {
            assert!(phi_bound_check(&path, mu));
        }
        let zero = OpticalPath::new(0.0, 0.7, 0.0, AltitudeShape::Uniform, &p);
        assert!(phi_bound_check(&zero, 0.4));
    }

    #[test]
    fn constant_index_reduces_to_classical() {
        let p = flat();
        let q = QuadratureSpec::default();
        for &zp in &[0.2, 0.5, 1.0] {
            let path = OpticalPath::new(0.0, zp, 0.5, AltitudeShape::PRECISION_STUDY, &p);
            let x = 0.5 * AltitudeShape::PRECISION_STUDY.integral(0.0, zp);
            for k in ORDERS {
                let e = ek_general(k, &path, &q).unwrap();
                let exact = expint::expint(k, x).unwrap();
                assert!(((e - exact) / exact).abs() < 0.01, "k={k} zp={zp} {e} vs {exact}");
            }
        }
    }

    #[test]
    fn no_absorption_gives_moments() {
        let p = flat();
        let path = OpticalPath::new(0.3, 0.8, 0.0, AltitudeShape::Uniform, &p);
        let q = QuadratureSpec::default();
        assert_relative_eq!(ek_general(3, &path, &q).unwrap(), 0.5, max_relative = 1e-4);
        assert_relative_eq!(ek_general(5, &path, &q).unwrap(), 0.25, max_relative = 1e-3);
    }

    #[test]
    fn order_guards() {
        let p = flat();
        let path = OpticalPath::new(0.0, 0.5, 0.5, AltitudeShape::Uniform, &p);
        let q = QuadratureSpec::default();
        assert!(matches!(ek_general(2, &path, &q), Err(Error::Unsupported(_))));
        assert!(matches!(ek_approx(1, &path), Err(Error::Unsupported(_))));
        let x = 0.25;
        assert_relative_eq!(ek_approx(3, &path).unwrap(), expint::expint(3, x).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn diagonal_values() {
        assert!(diagonal_point(0, 0.0).is_infinite());
        assert_eq!(diagonal_point(1, 0.0), 0.5);
        assert_eq!(diagonal_point(2, 0.0), 0.25);
        let p = RefractiveProfile::cloud_slab(0.01).unwrap();
        let path = OpticalPath::new(0.6, 0.6, 0.5, AltitudeShape::Uniform, &p);
        let lo = admissibility(0.6, &p).mu_hi;
        assert_relative_eq!(ek_general(1, &path, &QuadratureSpec::default()).unwrap(), -lo.ln());
    }
}
