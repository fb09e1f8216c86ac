//! Frequency-domain physics: Planck emission, frequency quadrature and the
//! Rayleigh / isotropic scattering phase matrices.
//!
//! All quantities are in the nondimensional scales used throughout the crate:
//! `B_nu(T) = nu^3 / (exp(nu/T) - 1)` and Stefan's law reads
//! `int B_nu(T) dnu = (pi T)^4 / 15`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::solver::Boundary;

/// Above this value of `nu/T` the Planck function is returned as zero.
const MAX_EXPONENT: f64 = 700.0;

/// Planck spectral radiance `nu^3 / (exp(nu/T) - 1)`.
pub fn planck(nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("planck: frequency must be > 0, got {nu}")));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("planck: temperature must be >= 0, got {t}")));
    }
    Ok(planck_unchecked(nu, t))
}

#[inline]
pub(crate) fn planck_unchecked(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu / t;
    if x > MAX_EXPONENT {
        0.0
    } else {
        nu * nu * nu / x.exp_m1()
    }
}

/// Temperature derivative of [`planck`].
pub fn planck_dt(nu: f64, t: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("planck_dt: frequency must be > 0, got {nu}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("planck_dt: temperature must be > 0, got {t}")));
    }
    Ok(planck_dt_unchecked(nu, t))
}

#[inline]
pub(crate) fn planck_dt_unchecked(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu / t;
    if x > MAX_EXPONENT {
        return 0.0;
    }
    // dB/dT = B * (x/T) * e^x / (e^x - 1)
    planck_unchecked(nu, t) * (x / t) / -(-x).exp_m1()
}

/// Exact frequency integral of the Planck function, `(pi T)^4 / 15`.
pub fn stefan_integral(t: f64) -> f64 {
    (PI * t).powi(4) / 15.0
}

/// Quadrature over `nu in (0, inf)` restricted to `[nu_min, nu_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    nu_min: f64,
}

impl FrequencyGrid {
    pub const DEFAULT_NU_MIN: f64 = 0.002;
    pub const DEFAULT_NU_MAX: f64 = 20.0;
    pub const DEFAULT_NODES: usize = 128;

    /// Geometric nodes on `[nu_min, nu_max]` with trapezoid weights in `ln nu`.
    pub fn geometric(nu_min: f64, nu_max: f64, n: usize) -> Result<Self> {
        if !(nu_min > 0.0) || !(nu_max > nu_min) || n < 2 {
            return Err(Error::Domain(format!(
                "frequency grid needs 0 < nu_min < nu_max and n >= 2 (got {nu_min}, {nu_max}, {n})"
            )));
        }
        let h = (nu_max / nu_min).ln() / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| nu_min * (h * i as f64).exp()).collect();
        nodes[n - 1] = nu_max;
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(i, nu)| {
                let end = i == 0 || i == n - 1;
                nu * h * if end { 0.5 } else { 1.0 }
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            nu_min,
        })
    }

    /// Arbitrary strictly increasing nodes with trapezoid weights.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || !(nodes[0] > 0.0) {
            return Err(Error::Domain("frequency nodes must be positive".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("frequency nodes must be strictly increasing".into()));
        }
        let n = nodes.len();
        let weights = if n == 1 {
            vec![1.0]
        } else {
            (0..n)
                .map(|i| {
                    let lo = if i == 0 { nodes[0] } else { nodes[i - 1] };
                    let hi = if i == n - 1 { nodes[n - 1] } else { nodes[i + 1] };
                    0.5 * (hi - lo)
                })
                .collect()
        };
        Ok(Self {
            nu_min: nodes[0],
            nodes,
            weights,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nu_min(&self) -> f64 {
        self.nu_min
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `sum_i w_i f(nu_i)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&nu, &w)| w * f(nu))
            .sum()
    }

    /// Relative error of the grid quadrature of `B_nu(T)` against Stefan's law.
    pub fn stefan_relative_error(&self, t: f64) -> f64 {
        let exact = stefan_integral(t);
        let approx = self.integrate(|nu| planck_unchecked(nu, t));
        (approx - exact).abs() / exact
    }
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self::geometric(
            Self::DEFAULT_NU_MIN,
            Self::DEFAULT_NU_MAX,
            Self::DEFAULT_NODES,
        )
        .expect("default grid is valid")
    }
}

/// The two scattering laws mixed by the weight `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Rayleigh,
    Isotropic,
}

impl PhaseKind {
    /// Azimuth-averaged 2x2 phase matrix acting on `(I_l, I_r)`.
    pub fn matrix(self, mu: f64, mup: f64) -> [[f64; 2]; 2] {
        match self {
            PhaseKind::Rayleigh => {
                let (m2, p2) = (mu * mu, mup * mup);
                [
                    [1.5 * (2.0 * (1.0 - m2) * (1.0 - p2) + m2 * p2), 1.5 * m2],
                    [1.5 * p2, 1.5],
                ]
            }
            PhaseKind::Isotropic => [[0.5, 0.5], [0.5, 0.5]],
        }
    }
}

/// `beta * Z_R(mu, mu') + (1 - beta) * Z_I`.
pub fn reduced_phase(beta: f64, mu: f64, mup: f64) -> Result<[[f64; 2]; 2]> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta must lie in [0,1], got {beta}")));
    }
    check_cosine(mu)?;
    check_cosine(mup)?;
    let r = PhaseKind::Rayleigh.matrix(mu, mup);
    let i = PhaseKind::Isotropic.matrix(mu, mup);
    let mut out = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            out[a][b] = beta * r[a][b] + (1.0 - beta) * i[a][b];
        }
    }
    Ok(out)
}

fn check_cosine(mu: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::Domain(format!("direction cosine {mu} outside [-1,1]")))
    }
}

pub type Matrix4 = [[f64; 4]; 4];

/// Azimuth-independent part `P0` of the Rayleigh phase matrix.
pub fn rayleigh_p0(mu: f64, mup: f64) -> Matrix4 {
    let (m2, p2) = (mu * mu, mup * mup);
    let mut p = [[0.0; 4]; 4];
    p[0][0] = 2.0 * (1.0 - m2) * (1.0 - p2) + m2 * p2;
    p[0][1] = m2;
    p[1][0] = p2;
    p[1][1] = 1.0;
    p[3][3] = mu * mup;
    scale(p, 0.75)
}

/// First azimuthal harmonic `P1`, without the `sqrt((1-mu^2)(1-mu'^2))` factor.
pub fn rayleigh_p1(mu: f64, mup: f64, dphi: f64) -> Matrix4 {
    let (c, s) = (dphi.cos(), dphi.sin());
    let mut p = [[0.0; 4]; 4];
    p[0][0] = 4.0 * mu * mup * c;
    p[0][2] = 2.0 * mu * s;
    p[2][0] = -2.0 * mup * s;
    p[2][2] = c;
    p[3][3] = c;
    scale(p, 0.75)
}

/// Second azimuthal harmonic `P2`.
pub fn rayleigh_p2(mu: f64, mup: f64, dphi: f64) -> Matrix4 {
    let (c, s) = ((2.0 * dphi).cos(), (2.0 * dphi).sin());
    let (m2, p2) = (mu * mu, mup * mup);
    let mut p = [[0.0; 4]; 4];
    p[0][0] = m2 * p2 * c;
    p[0][1] = -m2 * c;
    p[0][2] = m2 * mup * s;
    p[1][0] = -p2 * c;
    p[1][1] = c;
    p[1][2] = -mup * s;
    p[2][0] = -mu * p2 * s;
    p[2][1] = mu * s;
    p[2][2] = mu * mup * c;
    scale(p, 0.75)
}

fn scale(mut p: Matrix4, f: f64) -> Matrix4 {
    p.iter_mut().flatten().for_each(|v| *v *= f);
    p
}

/// Full 4x4 Rayleigh phase matrix `Q [P0 + sqrt(1-mu^2) sqrt(1-mu'^2) P1 + P2]`
/// with `Q = diag(1, 1, 2, 2)`.
pub fn full_phase(mu: f64, phi: f64, mup: f64, phip: f64) -> Result<Matrix4> {
    check_cosine(mu)?;
    check_cosine(mup)?;
    let dphi = phip - phi;
    let p0 = rayleigh_p0(mu, mup);
    let p1 = rayleigh_p1(mu, mup, dphi);
    let p2 = rayleigh_p2(mu, mup, dphi);
    let root = ((1.0 - mu * mu) * (1.0 - mup * mup)).max(0.0).sqrt();
    let q = [1.0, 1.0, 2.0, 2.0];
    let mut z = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            z[a][b] = q[a] * (p0[a][b] + root * p1[a][b] + p2[a][b]);
        }
    }
    Ok(z)
}

/// Mean of [`full_phase`] over `n` equispaced relative azimuths.
pub fn azimuthal_average(mu: f64, mup: f64, n: usize) -> Result<Matrix4> {
    if n == 0 {
        return Err(Error::Domain("azimuthal average needs at least one sample".into()));
    }
    let mut acc = [[0.0; 4]; 4];
    for s in 0..n {
        let dphi = 2.0 * PI * s as f64 / n as f64;
        let z = full_phase(mu, 0.0, mup, dphi)?;
        for (a, row) in acc.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v += z[a][b] / n as f64;
            }
        }
    }
    Ok(acc)
}

/// Polarization state of a boundary source.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Polarization {
    #[default]
    Unpolarized,
    /// Fractional Stokes components `(q, u, v)` relative to `I`.
    Polarized { q: f64, u: f64, v: f64 },
}

/// Witness that the `U` and `V` Stokes channels vanish identically, so the
/// transport reduces to the `(I, Q)` pair. Only [`assert_uv_zero`] creates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnpolarizedSources(());

/// Check that every boundary source is unpolarized.
pub fn assert_uv_zero(boundary: &Boundary) -> Result<UnpolarizedSources> {
    for (name, pol) in [("ground", boundary.ground_polarization), ("sun", boundary.sun_polarization)] {
        if let Polarization::Polarized { .. } = pol {
            return Err(Error::Unsupported(format!(
                "{name} boundary is polarized; only unpolarized sources keep U = V = 0"
            )));
        }
    }
    Ok(UnpolarizedSources(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn planck_limits() {
        assert_eq!(planck(1.0, 0.0).unwrap(), 0.0);
        let rj = planck(1.0, 1e6).unwrap() / 1e6;
        assert!(rj > 0.9999 && rj < 1.0001);
        assert!(planck(0.0, 1.0).is_err());
        assert!(planck(-1.0, 1.0).is_err());
        assert!(planck(1.0, -1.0).is_err());
        assert_eq!(planck(1000.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn planck_matches_direct_formula() {
        for &(nu, t) in &[(0.5, 0.0625), (1e-6, 1.0), (3.0, 1.0), (700.0, 1.0), (5.0, 0.01)] {
            let direct = nu * nu * nu / ((nu / t as f64).exp() - 1.0);
            let x: f64 = nu / t;
            // expm1 is the reference near x = 0 where the direct form loses digits
            let reference = if x < 1e-3 { nu * nu * nu / x.exp_m1() } else { direct };
            assert_relative_eq!(planck(nu, t).unwrap(), reference, max_relative = 1e-12);
        }
    }

    #[test]
    fn planck_dt_matches_finite_difference() {
        for &(nu, t) in &[(0.5, 0.0625), (0.1, 0.02), (2.0, 0.2), (5.0, 1.19)] {
            let d = planck_dt(nu, t).unwrap();
            let h = 1e-5 * t;
            let fd = (planck(nu, t + h).unwrap() - planck(nu, t - h).unwrap()) / (2.0 * h);
            assert!(((d - fd) / d).abs() < 1e-6, "nu={nu} t={t} d={d} fd={fd}");
            assert!(d > 0.0);
        }
        assert_relative_eq!(planck_dt(1.0, 1e6).unwrap(), 1.0, max_relative = 1e-6);
        assert!(planck_dt(1.0, 0.0).is_err());
    }

    #[test]
    fn stefan_gate_on_default_grid() {
        let g = FrequencyGrid::default();
        for t in [0.02, 0.0625, 0.2] {
            assert!(g.stefan_relative_error(t) < 1e-3, "T={t}");
        }
        // Stefan at T = 2 over the full real line is (2 pi)^4 / 15; needs a wider grid.
        let wide = FrequencyGrid::geometric(1e-3, 200.0, 400).unwrap();
        let total = wide.integrate(|nu| planck_unchecked(nu, 2.0));
        assert_relative_eq!(total, (2.0 * PI).powi(4) / 15.0, max_relative = 1e-3);
    }

    #[test]
    fn grid_shape() {
        let g = FrequencyGrid::default();
        assert_eq!(g.len(), 128);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.weights().iter().all(|&w| w > 0.0));
        assert_relative_eq!(g.nodes()[127], 20.0);
        assert!(FrequencyGrid::from_nodes(vec![1.0, 0.5]).is_err());
        assert!(FrequencyGrid::geometric(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn reduced_phase_examples() {
        assert_eq!(reduced_phase(0.0, 0.3, -0.7).unwrap(), [[0.5, 0.5], [0.5, 0.5]]);
        assert_eq!(reduced_phase(1.0, 0.0, 0.0).unwrap(), [[3.0, 0.0], [0.0, 1.5]]);
        assert_eq!(reduced_phase(1.0, 1.0, 1.0).unwrap(), [[1.5, 1.5], [1.5, 1.5]]);
        assert!(reduced_phase(1.2, 0.0, 0.0).is_err());
        assert!(reduced_phase(0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn reduced_phase_nonnegative_on_lattice() {
        for beta in [0.0, 0.5, 1.0] {
            for i in 0..=100 {
                for j in 0..=100 {
                    let mu = -1.0 + 0.02 * i as f64;
                    let mup = -1.0 + 0.02 * j as f64;
                    let z = reduced_phase(beta, mu.clamp(-1.0, 1.0), mup.clamp(-1.0, 1.0)).unwrap();
                    assert!(z.iter().flatten().all(|&v| v >= 0.0));
                }
            }
        }
    }

    #[test]
    fn full_phase_substitution() {
        // mu = mu' = 1, dphi = 0: P0 top-left block is 3/4 [[1,1],[1,1]]
        let p0 = rayleigh_p0(1.0, 1.0);
        assert_eq!([p0[0][0], p0[0][1], p0[1][0], p0[1][1]], [0.75; 4]);
        let z = full_phase(0.3, 0.1, -0.4, 2.0).unwrap();
        assert!(z.iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn polarized_boundary_is_rejected() {
        let mut b = Boundary::case1();
        assert!(assert_uv_zero(&b).is_ok());
        b.sun_polarization = Polarization::Polarized { q: 0.0, u: 0.3, v: 0.0 };
        assert!(matches!(assert_uv_zero(&b), Err(Error::Unsupported(_))));
        let none = Boundary {
            ground_intensity: 0.0,
            sun_intensity: 0.0,
            ..Boundary::case1()
        };
        assert!(assert_uv_zero(&none).is_ok());
    }
}
