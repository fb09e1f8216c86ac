use crate::error::Result;
use crate::physics::planck_unchecked;
use crate::solver::scenario::AtmosphereScenario;

/// Direction of a monotone iteration branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Started cold; iterates grow.
    Increasing,
    /// Started hot; iterates shrink.
    Decreasing,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Increasing => "increasing",
            Branch::Decreasing => "decreasing",
        }
    }
}

/// Coefficients of a scenario sampled on its `(nu, z)` grid.
#[derive(Debug, Clone)]
pub struct Medium {
    pub nz: usize,
    pub nf: usize,
    pub nu: Vec<f64>,
    pub nu_weight: Vec<f64>,
    pub kappa_nu: Vec<f64>,
    /// `kappa_a`, `kappa_s` and `beta kappa_s`, layout `f * nz + i`.
    pub kappa_a: Vec<f64>,
    pub kappa_s: Vec<f64>,
    pub beta: f64,
    pub n_sq: Vec<f64>,
    /// `c_E B~(T_E)` and `c_S B~(T_S)` per frequency.
    pub ground: Vec<f64>,
    pub sun: Vec<f64>,
}

impl Medium {
    pub fn new(s: &AtmosphereScenario) -> Result<Self> {
        s.validate()?;
        let (nz, nf) = (s.z.len(), s.freq.len());
        let nu = s.freq.nodes().to_vec();
        let kappa_nu: Vec<f64> = nu.iter().map(|&v| s.kappa.kappa_nu(v)).collect();
        let mut kappa_a = vec![0.0; nf * nz];
        let mut kappa_s = vec![0.0; nf * nz];
        for f in 0..nf {
            for (i, &z) in s.z.iter().enumerate() {
                let k = kappa_nu[f] * s.shape.value(z);
                let a = s.albedo.value(nu[f], z);
                kappa_s[f * nz + i] = k * a;
                kappa_a[f * nz + i] = k * (1.0 - a);
            }
        }
        let n_sq = s.z.iter().map(|&z| s.profile.n(z).powi(2)).collect();
        let (n0, ntop) = (s.profile.n(0.0).powi(2), s.profile.n(s.z_top()).powi(2));
        let b = &s.boundary;
        Ok(Self {
            nz,
            nf,
            ground: nu.iter().map(|&v| b.ground_intensity * planck_unchecked(v, b.ground_temperature) / n0).collect(),
            sun: nu.iter().map(|&v| b.sun_intensity * planck_unchecked(v, b.sun_temperature) / ntop).collect(),
            nu_weight: s.freq.weights().to_vec(),
            nu,
            kappa_nu,
            kappa_a,
            kappa_s,
            beta: s.beta,
            n_sq,
        })
    }

    /// `B~_nu(T) = B_nu(T) / n^2` at frequency index `f`, altitude index `i`.
    #[inline]
    pub fn planck_tilde(&self, f: usize, i: usize, t: f64) -> f64 {
        planck_unchecked(self.nu[f], t) / self.n_sq[i]
    }
}

/// One iterate: angular moments of `I~` (`J0`, `J2`) and `Q~` (`K0`, `K2`)
/// per frequency and altitude, plus the temperature profile.
///
/// Moment arrays use the layout `f * nz + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationState {
    pub nz: usize,
    pub nf: usize,
    pub j0: Vec<f64>,
    pub j2: Vec<f64>,
    pub k0: Vec<f64>,
    pub k2: Vec<f64>,
    pub t: Vec<f64>,
    pub iteration: usize,
    pub direction: Branch,
}

impl RadiationState {
    /// `T = 0` and no radiation.
    pub fn cold(medium: &Medium) -> Self {
        let n = medium.nz * medium.nf;
        Self {
            nz: medium.nz,
            nf: medium.nf,
            j0: vec![0.0; n],
            j2: vec![0.0; n],
            k0: vec![0.0; n],
            k2: vec![0.0; n],
            t: vec![0.0; medium.nz],
            iteration: 0,
            direction: Branch::Increasing,
        }
    }

    /// Constant temperature `t0` with isotropic, unpolarized black-body radiation.
    pub fn hot(medium: &Medium, t0: f64) -> Self {
        let mut s = Self::cold(medium);
        s.direction = Branch::Decreasing;
        s.t.fill(t0);
        for f in 0..medium.nf {
            for i in 0..medium.nz {
                let b = medium.planck_tilde(f, i, t0);
                s.j0[f * medium.nz + i] = b;
                s.j2[f * medium.nz + i] = b / 3.0;
            }
        }
        s
    }

    #[inline]
    pub fn idx(&self, f: usize, i: usize) -> usize {
        f * self.nz + i
    }

    /// Slice of a moment array at one frequency.
    pub fn at<'a>(&self, field: &'a [f64], f: usize) -> &'a [f64] {
        &field[f * self.nz..(f + 1) * self.nz]
    }
}
