//! Angular intensity and polarization `I(z, mu)`, `Q(z, mu)` at one frequency,
//! rebuilt from a converged state by integrating along characteristics.

use crate::error::{Error, Result};
use crate::optics::{admissibility, eta_sq};
use crate::par::Execution;
use crate::physics::FrequencyGrid;
use crate::solver::{
    assemble_sources, update_moments, AtmosphereScenario, KernelMode, KernelSettings, Medium, Moments, RadiationState,
    Solution, SolveOptions, Sources, Transport,
};

/// Frequency used for the published surfaces.
pub const SURFACE_NU: f64 = 0.1436;
pub const DEFAULT_MU_NODES: usize = 400;
const MONO_TOL: f64 = 1e-13;
const MONO_MAX_ITER: usize = 1000;

/// Symmetric midpoint nodes on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuMesh {
    nodes: Vec<f64>,
    weight: f64,
}

impl MuMesh {
    /// `n` (even, at least 2) equal cells.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Domain(format!("mu mesh needs an even number of nodes >= 2, got {n}")));
        }
        let h = 2.0 / n as f64;
        Ok(Self {
            nodes: (0..n).map(|k| -1.0 + (k as f64 + 0.5) * h).collect(),
            weight: h,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

impl Default for MuMesh {
    fn default() -> Self {
        Self::uniform(DEFAULT_MU_NODES).expect("default mesh is valid")
    }
}

/// `I` and `Q` on a `(z, mu)` lattice. Forbidden cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesField {
    pub nu: f64,
    pub z: Vec<f64>,
    pub mesh: MuMesh,
    /// `n(z)^2` at every altitude.
    pub n_sq: Vec<f64>,
    /// Layout `iz * n_mu + im`.
    pub i: Vec<Option<f64>>,
    pub q: Vec<Option<f64>>,
    /// The moments at `nu` the field was built from.
    pub moments: Moments,
}

impl StokesField {
    pub fn mu(&self) -> &[f64] {
        self.mesh.nodes()
    }

    fn at(&self, v: &[Option<f64>], iz: usize, im: usize) -> Option<f64> {
        v[iz * self.mesh.len() + im]
    }

    pub fn intensity(&self, iz: usize, im: usize) -> Option<f64> {
        self.at(&self.i, iz, im)
    }

    pub fn polarization(&self, iz: usize, im: usize) -> Option<f64> {
        self.at(&self.q, iz, im)
    }

    /// Number of admissible directions at altitude index `iz`.
    pub fn admissible(&self, iz: usize) -> usize {
        let n = self.mesh.len();
        self.i[iz * n..(iz + 1) * n].iter().filter(|v| v.is_some()).count()
    }

    /// `1/2 sum w mu^k X~` for `k = 0, 2` over the admissible nodes at `iz`.
    fn tilde_moments(&self, v: &[Option<f64>], iz: usize) -> [f64; 2] {
        let w = 0.5 * self.mesh.weight() / self.n_sq[iz];
        let mut m = [0.0; 2];
        for (im, &mu) in self.mu().iter().enumerate() {
            if let Some(x) = self.at(v, iz, im) {
                m[0] += w * x;
                m[1] += w * mu * mu * x;
            }
        }
        m
    }

    /// `(J0, J2, K0, K2)` of the field at every altitude, in the tilde convention.
    pub fn angular_moments(&self) -> Moments {
        let nz = self.z.len();
        let mut m = Moments {
            j0: vec![0.0; nz],
            j2: vec![0.0; nz],
            k0: vec![0.0; nz],
            k2: vec![0.0; nz],
        };
        for iz in 0..nz {
            [m.j0[iz], m.j2[iz]] = self.tilde_moments(&self.i, iz);
            [m.k0[iz], m.k2[iz]] = self.tilde_moments(&self.q, iz);
        }
        m
    }
}

/// Largest deviations found by [`moment_consistency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    /// `max_z |J_k,field - J_k| / J_k` for `k = 0, 2`.
    pub j_rel: [f64; 2],
    /// `max_z |K_k,field - K_k| / max_z |K_k|` for `k = 0, 2`.
    pub k_rel: [f64; 2],
    pub tolerance: f64,
}

impl ConsistencyReport {
    pub const TOLERANCE: f64 = 0.02;

    pub fn worst(&self) -> f64 {
        self.j_rel.iter().chain(&self.k_rel).cloned().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.worst() <= self.tolerance
    }
}

fn pointwise_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x == y {
                0.0
            } else if *y == 0.0 {
                f64::INFINITY
            } else {
                ((x - y) / y).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn scaled_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Compare the angular moments of `field` with the solver moments it was built from.
pub fn moment_consistency(field: &StokesField, moments: &Moments) -> ConsistencyReport {
    let m = field.angular_moments();
    ConsistencyReport {
        j_rel: [pointwise_rel(&m.j0, &moments.j0), pointwise_rel(&m.j2, &moments.j2)],
        k_rel: [scaled_rel(&m.k0, &moments.k0), scaled_rel(&m.k2, &moments.k2)],
        tolerance: ConsistencyReport::TOLERANCE,
    }
}

/// Scenario restricted to the single frequency `nu`.
fn monochromatic(scenario: &AtmosphereScenario, nu: f64) -> Result<(AtmosphereScenario, Medium)> {
    let s = AtmosphereScenario {
        freq: FrequencyGrid::from_nodes(vec![nu])?,
        ..scenario.clone()
    };
    let medium = Medium::new(&s)?;
    Ok((s, medium))
}

/// Moments at `nu` with the temperature held at `t`, iterated from zero.
pub fn monochromatic_moments(
    scenario: &AtmosphereScenario,
    t: &[f64],
    nu: f64,
    opts: &SolveOptions,
) -> Result<Moments> {
    let (s, medium) = monochromatic(scenario, nu)?;
    let settings = KernelSettings {
        mode: KernelMode::Direct,
        ..opts.kernels
    };
    let transport = Transport::build(&s, &medium, &settings, opts.execution)?;
    let mut state = RadiationState::cold(&medium);
    state.t.copy_from_slice(t);
    for _ in 0..MONO_MAX_ITER {
        let m = update_moments(&state, &medium, &transport, opts.form, opts.execution);
        let scale = m.j0.iter().cloned().fold(0.0, f64::max);
        let change = [(&m.j0, &state.j0), (&m.j2, &state.j2), (&m.k0, &state.k0), (&m.k2, &state.k2)]
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        state.j0 = m.j0;
        state.j2 = m.j2;
        state.k0 = m.k0;
        state.k2 = m.k2;
        if change <= MONO_TOL * scale {
            return Ok(Moments {
                j0: state.j0,
                j2: state.j2,
                k0: state.k0,
                k2: state.k2,
            });
        }
    }
    Err(Error::Data(format!(
        "moments at nu={nu} did not settle within {MONO_MAX_ITER} sweeps"
    )))
}

/// Moments of `solution` at `nu`: copied when `nu` is a grid node,
/// otherwise recomputed at the converged temperature.
pub fn moments_at(scenario: &AtmosphereScenario, solution: &Solution, nu: f64, opts: &SolveOptions) -> Result<Moments> {
    let nodes = scenario.freq.nodes();
    if let Some(f) = nodes.iter().position(|&v| (v - nu).abs() <= 1e-12 * nu) {
        let st = solution.state();
        let take = |v: &[f64]| st.at(v, f).to_vec();
        return Ok(Moments {
            j0: take(&st.j0),
            j2: take(&st.j2),
            k0: take(&st.k0),
            k2: take(&st.k2),
        });
    }
    monochromatic_moments(scenario, solution.temperature(), nu, opts)
}

/// `(E - (D - E)/D, (D - E)/D)` with `E = 1 - exp(-D)`: weights of the
/// two end values of a source linear in optical depth over a step `D`.
fn linear_weights(d: f64) -> (f64, f64) {
    let e = -(-d).exp_m1();
    let b = if d < 1e-4 { d * (0.5 - d / 6.0) } else { (d - e) / d };
    (e - b, b)
}

struct Marcher<'a> {
    scenario: &'a AtmosphereScenario,
    medium: &'a Medium,
    sources: &'a Sources,
    n: Vec<f64>,
    kappa: Vec<f64>,
    dz_inner: f64,
}

impl Marcher<'_> {
    /// Cosine at node `j` of the ray with cosine `mu` at node `i`.
    fn cosine(&self, mu: f64, i: usize, j: usize) -> Option<f64> {
        let s = eta_sq(mu, self.n[i], self.n[j]);
        (s > 0.0).then(|| s.sqrt())
    }

    /// Optical depth of the cell `[z_j, z_{j+1}]` for the ray with cosine `mu` at node `i`.
    fn depth(&self, mu: f64, i: usize, j: usize) -> Option<f64> {
        let (a, b) = (self.scenario.z[j], self.scenario.z[j + 1]);
        let m = (((b - a) / self.dz_inner - 1e-9).ceil() as usize).max(1);
        let h = (b - a) / m as f64;
        let mut acc = 0.0;
        for s in 0..m {
            let zm = a + (s as f64 + 0.5) * h;
            let e = eta_sq(mu, self.n[i], self.scenario.profile.n(zm));
            if e <= 0.0 {
                return None;
            }
            acc += self.scenario.shape.value(zm) / e.sqrt();
        }
        Some(self.medium.kappa_nu[0] * acc * h)
    }

    /// `(I~, Q~)` at node `i` in direction `mu`.
    fn solve(&self, i: usize, mu: f64) -> Option<(f64, f64)> {
        let last = self.n.len() - 1;
        let (start, cells): (usize, Vec<(usize, usize, usize)>) = if mu > 0.0 {
            (0, (0..i).map(|j| (j, j + 1, j)).collect())
        } else {
            (last, (i..last).rev().map(|j| (j + 1, j, j)).collect())
        };
        let m0 = self.cosine(mu, i, start)?;
        let mut iv = if mu > 0.0 { self.medium.ground[0] * m0 } else { self.medium.sun[0] * m0 };
        let mut qv = 0.0;
        let src = |j: usize, c: f64| {
            let s = self.sources;
            let c2 = c * c;
            ((s.s0[j] + c2 * s.s2[j]) / self.kappa[j], (s.q0[j] + c2 * s.q2[j]) / self.kappa[j])
        };
        let mut prev = (m0, src(start, m0));
        for (_, to, cell) in cells {
            let d = self.depth(mu, i, cell)?;
            let c = self.cosine(mu, i, to)?;
            let next = src(to, c);
            let (wa, wb) = linear_weights(d);
            let att = (-d).exp();
            iv = iv * att + wa * prev.1 .0 + wb * next.0;
            qv = qv * att + wa * prev.1 .1 + wb * next.1;
            prev = (c, next);
        }
        Some((iv, qv))
    }
}

/// Rebuild `I = n^2 I~` and `Q = n^2 Q~` at frequency `nu` on `mesh`.
pub fn reconstruct(
    scenario: &AtmosphereScenario,
    solution: &Solution,
    nu: f64,
    mesh: &MuMesh,
    opts: &SolveOptions,
) -> Result<StokesField> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::Domain(format!("frequency must be finite and > 0, got {nu}")));
    }
    let moments = moments_at(scenario, solution, nu, opts)?;
    field_from_moments(scenario, &solution.state().t, nu, moments, mesh, opts.kernels.dz_inner, opts.execution)
}

/// [`reconstruct`] from given moments and temperature.
pub fn field_from_moments(
    scenario: &AtmosphereScenario,
    t: &[f64],
    nu: f64,
    moments: Moments,
    mesh: &MuMesh,
    dz_inner: f64,
    exec: Execution,
) -> Result<StokesField> {
    let (_, medium) = monochromatic(scenario, nu)?;
    let nz = medium.nz;
    if t.len() != nz || moments.j0.len() != nz {
        return Err(Error::Data("temperature or moments do not match the altitude grid".into()));
    }
    let state = RadiationState {
        j0: moments.j0.clone(),
        j2: moments.j2.clone(),
        k0: moments.k0.clone(),
        k2: moments.k2.clone(),
        t: t.to_vec(),
        ..RadiationState::cold(&medium)
    };
    let sources = assemble_sources(&state, &medium, 0);
    let marcher = Marcher {
        scenario,
        medium: &medium,
        sources: &sources,
        n: scenario.z.iter().map(|&z| scenario.profile.n(z)).collect(),
        kappa: scenario.z.iter().map(|&z| medium.kappa_nu[0] * scenario.shape.value(z)).collect(),
        dz_inner,
    };
    let rows = exec.map(nz, |iz| {
        let cone = admissibility(scenario.z[iz], &scenario.profile);
        mesh.nodes()
            .iter()
            .map(|&mu| {
                if !cone.contains(mu) {
                    return None;
                }
                marcher.solve(iz, mu).map(|(i, q)| (medium.n_sq[iz] * i, medium.n_sq[iz] * q))
            })
            .collect::<Vec<_>>()
    });
    let mut i = Vec::with_capacity(nz * mesh.len());
    let mut q = Vec::with_capacity(nz * mesh.len());
    for row in rows {
        for cell in row {
            i.push(cell.map(|c| c.0));
            q.push(cell.map(|c| c.1));
        }
    }
    Ok(StokesField {
        nu,
        z: scenario.z.clone(),
        mesh: mesh.clone(),
        n_sq: medium.n_sq.clone(),
        i,
        q,
        moments,
    })
}
