//! Ray geometry in a stratified medium with refractive index `n(z)`.
//!
//! Along a characteristic the invariant `(1 - mu^2) n(z)^2` is conserved, so
//! the direction cosine at altitude `z''` of a ray that has cosine `mu` at `z`
//! is `eta = sqrt(1 - (1 - mu^2) n_z^2 / n_z''^2)` with the sign of `mu`.
//! Rays for which the radicand vanishes somewhere are totally refracted and
//! never connect both boundaries; they are excluded through the
//! [`AdmissibilityCone`].

use std::path::Path;

use crate::error::{Error, Result};

/// How `n(z)` is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    Constant(f64),
    /// `n = 1 + eps` on the open interval `(z1, z2)`, `1` elsewhere.
    CloudSlab { eps: f64, z1: f64, z2: f64 },
    /// Piecewise-linear table, clamped at both ends.
    Table { z: Vec<f64>, n: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefractiveProfile {
    kind: ProfileKind,
    z_top: f64,
}

impl RefractiveProfile {
    pub const SLAB_BOTTOM: f64 = 0.5;
    pub const SLAB_TOP: f64 = 0.7;

    pub fn constant(n: f64) -> Result<Self> {
        if !(n >= 1.0) || !n.is_finite() {
            return Err(Error::Domain(format!("refractive index must be >= 1, got {n}")));
        }
        Ok(Self {
            kind: ProfileKind::Constant(n),
            z_top: 1.0,
        })
    }

    /// `n(z) = 1 + eps * 1_{z in (0.5, 0.7)}`.
    pub fn cloud_slab(eps: f64) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("slab index bump must be >= 0, got {eps}")));
        }
        Ok(Self {
            kind: ProfileKind::CloudSlab {
                eps,
                z1: Self::SLAB_BOTTOM,
                z2: Self::SLAB_TOP,
            },
            z_top: 1.0,
        })
    }

    pub fn table(z: Vec<f64>, n: Vec<f64>) -> Result<Self> {
        if z.len() != n.len() || z.len() < 2 {
            return Err(Error::Data("profile table needs at least two (z, n) rows".into()));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Data("profile table altitudes must be strictly increasing".into()));
        }
        if n.iter().any(|&v| !(v >= 1.0) || !v.is_finite()) {
            return Err(Error::Data("profile table indices must be finite and >= 1".into()));
        }
        Ok(Self {
            kind: ProfileKind::Table { z, n },
            z_top: 1.0,
        })
    }

    /// Read a two-column `(z, n)` text table; `#` starts a comment.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = crate::io::parse_columns(path, &text, 2)?;
        let (z, n) = rows.into_iter().map(|r| (r[0], r[1])).unzip();
        Self::table(z, n)
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn z_top(&self) -> f64 {
        self.z_top
    }

    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ProfileKind::Constant(_) => true,
            ProfileKind::CloudSlab { eps, .. } => *eps == 0.0,
            ProfileKind::Table { n, .. } => n.iter().all(|&v| v == n[0]),
        }
    }

    /// Refractive index at altitude `z`.
    pub fn n(&self, z: f64) -> f64 {
        match &self.kind {
            ProfileKind::Constant(n) => *n,
            ProfileKind::CloudSlab { eps, z1, z2 } => {
                if z > *z1 && z < *z2 {
                    1.0 + eps
                } else {
                    1.0
                }
            }
            ProfileKind::Table { z: zs, n } => {
                let last = zs.len() - 1;
                if z <= zs[0] {
                    return n[0];
                }
                if z >= zs[last] {
                    return n[last];
                }
                let k = zs.partition_point(|&v| v <= z) - 1;
                let t = (z - zs[k]) / (zs[k + 1] - zs[k]);
                n[k] + t * (n[k + 1] - n[k])
            }
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ProfileKind::Constant(n) => format!("constant n={n}"),
            ProfileKind::CloudSlab { eps, z1, z2 } => format!("cloud slab eps={eps} on ({z1},{z2})"),
            ProfileKind::Table { z, .. } => format!("table with {} rows", z.len()),
        }
    }
}

/// Squared transported cosine `1 - (1 - mu^2) (n_from / n_to)^2`.
#[inline]
pub(crate) fn eta_sq(mu: f64, n_from: f64, n_to: f64) -> f64 {
    let r = n_from / n_to;
    1.0 - (1.0 - mu * mu) * r * r
}

/// Direction cosine at `z2` of the ray with cosine `mu` at `z`, or `None`
/// when the ray is totally refracted before reaching `z2`.
pub fn eta(mu: f64, z: f64, z2: f64, profile: &RefractiveProfile) -> Option<f64> {
    if mu.abs() >= 1.0 {
        return Some(mu.signum());
    }
    let s = eta_sq(mu, profile.n(z), profile.n(z2));
    if s > 0.0 {
        Some(s.sqrt().copysign(mu))
    } else {
        None
    }
}

/// Which way round the index ratio enters the fast approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioOrientation {
    /// `eta_h = mu * n(z') / n(z)`
    #[default]
    Printed,
    /// `eta_h = mu * n(z) / n(z')`
    Reciprocal,
}

impl RatioOrientation {
    /// The factor multiplying `mu`.
    pub fn ratio(self, n_z: f64, n_zp: f64) -> f64 {
        match self {
            RatioOrientation::Printed => n_zp / n_z,
            RatioOrientation::Reciprocal => n_z / n_zp,
        }
    }
}

/// Linearized transport `eta_h = mu * n(z')/n(z)` that drops the `-eps` term.
pub fn eta_h(mu: f64, z: f64, zp: f64, profile: &RefractiveProfile, orientation: RatioOrientation) -> f64 {
    mu * orientation.ratio(profile.n(z), profile.n(zp))
}

/// Directions admissible at one altitude: `mu^2 > mu_star_sq`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityCone {
    pub z: f64,
    pub mu_star_sq: f64,
    pub mu_lo: f64,
    pub mu_hi: f64,
}

impl AdmissibilityCone {
    /// Ties on the cone boundary are inadmissible.
    pub fn contains(&self, mu: f64) -> bool {
        (-1.0..=1.0).contains(&mu) && mu * mu > self.mu_star_sq
    }

    pub fn threshold(&self) -> f64 {
        self.mu_hi
    }
}

/// `mu*^2 = max{0, 1 - n_0^2/n_z^2, 1 - n_Z^2/n_z^2}`.
pub fn admissibility(z: f64, profile: &RefractiveProfile) -> AdmissibilityCone {
    let nz = profile.n(z);
    let n0 = profile.n(0.0);
    let ntop = profile.n(profile.z_top());
    let s = 0.0f64
        .max(1.0 - (n0 / nz).powi(2))
        .max(1.0 - (ntop / nz).powi(2));
    let hi = s.sqrt();
    AdmissibilityCone {
        z,
        mu_star_sq: s,
        mu_lo: -hi,
        mu_hi: hi,
    }
}

/// Outcome of [`check_propagation`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagationReport {
    pub checked: usize,
    pub skipped: usize,
    /// `(z, mu, z')` triples where the transported direction left the cone.
    pub violations: Vec<(f64, f64, f64)>,
}

impl PropagationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const CONE_SLACK: f64 = 1e-12;

/// Verify that admissible directions stay admissible along their characteristic.
///
/// `directions(z)` lists candidate cosines at `z`; inadmissible ones are
/// counted as skipped.
pub fn check_propagation_with(
    profile: &RefractiveProfile,
    z_grid: &[f64],
    directions: impl Fn(f64) -> Vec<f64>,
) -> PropagationReport {
    let cones: Vec<_> = z_grid.iter().map(|&z| admissibility(z, profile)).collect();
    let mut report = PropagationReport::default();
    for (cone, &z) in cones.iter().zip(z_grid) {
        for mu in directions(z) {
            if !cone.contains(mu) {
                report.skipped += 1;
                continue;
            }
            report.checked += 1;
            for (target, &zp) in cones.iter().zip(z_grid) {
                let ok = match eta(mu, z, zp, profile) {
                    Some(m) => m * m >= target.mu_star_sq - CONE_SLACK && m.signum() == mu.signum(),
                    None => false,
                };
                if !ok {
                    report.violations.push((z, mu, zp));
                }
            }
        }
    }
    report
}

/// [`check_propagation_with`] on `n_mu` admissible cosines per altitude,
/// alternating in sign and spread over `(mu*, 1)`.
pub fn check_propagation(profile: &RefractiveProfile, z_grid: &[f64], n_mu: usize) -> PropagationReport {
    check_propagation_with(profile, z_grid, |z| {
        let lo = admissibility(z, profile).mu_hi;
        (0..n_mu)
            .map(|j| {
                let m = lo + (1.0 - lo) * (j as f64 + 0.5) / n_mu as f64;
                if j % 2 == 0 {
                    m
                } else {
                    -m
                }
            })
            .collect()
    })
}
