use std::time::Instant;

use crate::error::{Error, Result};
use crate::kernels::{KernelGeometry, KernelOperator, KernelTable, QuadratureSpec, DEFAULT_DZ_INNER};
use crate::par::Execution;
use crate::solver::scenario::AtmosphereScenario;
use crate::solver::sources::{anisotropy, assemble_sources_linear, emission};
use crate::solver::state::{Medium, RadiationState};

/// Where kernel values come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// Interpolated from a [`KernelTable`].
    #[default]
    Table,
    /// Summed at the exact `kappa_nu` of every frequency.
    Direct,
}

/// Which pair of intensities the sources are assembled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceForm {
    /// `(I, Q)` with the `H_k` shortcut.
    #[default]
    Stokes,
    /// `(I_l, I_r)`, whose sources are nonnegative.
    Components,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSettings {
    pub quad: QuadratureSpec,
    pub dz_inner: f64,
    pub mode: KernelMode,
    pub kappa_nodes: usize,
}

impl Default for KernelSettings {
    fn default() -> Self {
        Self {
            quad: QuadratureSpec::default(),
            dz_inner: DEFAULT_DZ_INNER,
            mode: KernelMode::Table,
            kappa_nodes: KernelTable::DEFAULT_KAPPA_NODES,
        }
    }
}

/// The discretized transport: one [`KernelOperator`] per frequency.
#[derive(Debug, Clone)]
pub struct Transport {
    geometry: KernelGeometry,
    table: Option<KernelTable>,
    ops: Vec<KernelOperator>,
    pub geometry_seconds: f64,
    pub table_seconds: f64,
}

impl Transport {
    pub fn build(scenario: &AtmosphereScenario, medium: &Medium, settings: &KernelSettings, exec: Execution) -> Result<Self> {
        settings.quad.validate()?;
        let t0 = Instant::now();
        let geometry = KernelGeometry::build(&scenario.z, &scenario.profile, scenario.shape, &settings.quad, settings.dz_inner, exec)?;
        let geometry_seconds = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let (table, ops) = match settings.mode {
            KernelMode::Table => {
                let (lo, hi) = scenario.kappa_nu_range();
                let table = KernelTable::build(&geometry, lo, hi, settings.kappa_nodes, exec)?;
                let ops = exec.map(medium.nf, |f| table.operator(medium.kappa_nu[f]));
                (Some(table), ops)
            }
            KernelMode::Direct => (None, exec.map(medium.nf, |f| geometry.operator(medium.kappa_nu[f]))),
        };
        Ok(Self {
            geometry,
            table,
            ops,
            geometry_seconds,
            table_seconds: t1.elapsed().as_secs_f64(),
        })
    }

    /// Reuse a table built elsewhere (e.g. imported from disk).
    pub fn from_table(geometry: KernelGeometry, table: KernelTable, medium: &Medium, exec: Execution) -> Result<Self> {
        if table.z() != geometry.z() {
            return Err(Error::Data("kernel table altitude grid does not match the scenario".into()));
        }
        let ops = exec.map(medium.nf, |f| table.operator(medium.kappa_nu[f]));
        Ok(Self {
            geometry,
            table: Some(table),
            ops,
            geometry_seconds: 0.0,
            table_seconds: 0.0,
        })
    }

    pub fn geometry(&self) -> &KernelGeometry {
        &self.geometry
    }

    pub fn table(&self) -> Option<&KernelTable> {
        self.table.as_ref()
    }

    pub fn operator(&self, f: usize) -> &KernelOperator {
        &self.ops[f]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// New moments produced by one transport sweep, layout `f * nz + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub j0: Vec<f64>,
    pub j2: Vec<f64>,
    pub k0: Vec<f64>,
    pub k2: Vec<f64>,
}

/// `H_k = (9/16) int E_{k+1} beta kappa_s (J2 - J0/3 - K0 + K2) dz'` for `k = 0, 2, 4`.
pub fn compute_hk(state: &RadiationState, medium: &Medium, op: &KernelOperator, f: usize) -> [Vec<f64>; 3] {
    let nz = medium.nz;
    let x: Vec<f64> = (0..nz)
        .map(|i| {
            let p = f * nz + i;
            medium.beta * medium.kappa_s[p] * anisotropy(state, p)
        })
        .collect();
    let mut h = [vec![0.0; nz], vec![0.0; nz], vec![0.0; nz]];
    if x.iter().any(|&v| v != 0.0) {
        for (kidx, hk) in h.iter_mut().enumerate() {
            op.apply_add(kidx, &x, 9.0 / 16.0, hk);
        }
    }
    h
}

fn boundary_terms(medium: &Medium, op: &KernelOperator, f: usize, m: usize, scale: f64, out: &mut [f64]) {
    let (g, s) = (scale * medium.ground[f], scale * medium.sun[f]);
    for (i, o) in out.iter_mut().enumerate() {
        *o += g * op.ground(m)[i] + s * op.top(m)[i];
    }
}

fn sweep_stokes(state: &RadiationState, medium: &Medium, op: &KernelOperator, f: usize) -> [Vec<f64>; 4] {
    let nz = medium.nz;
    let e: Vec<f64> = (0..nz).map(|i| emission(state, medium, f, i)).collect();
    let h = compute_hk(state, medium, op, f);
    let mut j0 = vec![0.0; nz];
    let mut j2 = vec![0.0; nz];
    boundary_terms(medium, op, f, 0, 0.5, &mut j0);
    boundary_terms(medium, op, f, 1, 0.5, &mut j2);
    op.apply_add(0, &e, 0.5, &mut j0);
    op.apply_add(1, &e, 0.5, &mut j2);
    let mut k0 = vec![0.0; nz];
    let mut k2 = vec![0.0; nz];
    for i in 0..nz {
        j0[i] += h[1][i] - h[0][i] / 3.0;
        j2[i] += h[2][i] - h[1][i] / 3.0;
        k0[i] = h[1][i] - h[0][i];
        k2[i] = h[2][i] - h[1][i];
    }
    [j0, j2, k0, k2]
}

fn sweep_components(state: &RadiationState, medium: &Medium, op: &KernelOperator, f: usize) -> [Vec<f64>; 4] {
    let nz = medium.nz;
    let s = assemble_sources_linear(state, medium, f);
    let half = |src0: &[f64], src2: &[f64], q: usize| {
        let mut out = vec![0.0; nz];
        boundary_terms(medium, op, f, q, 0.25, &mut out);
        op.apply_add(q, src0, 0.5, &mut out);
        op.apply_add(q + 1, src2, 0.5, &mut out);
        out
    };
    let (l0, l2) = (half(&s.l0, &s.l2, 0), half(&s.l0, &s.l2, 1));
    let (r0, r2) = (half(&s.r0, &s.r2, 0), half(&s.r0, &s.r2, 1));
    let sum = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
    [sum(&l0, &r0), sum(&l2, &r2), diff(&l0, &r0), diff(&l2, &r2)]
}

/// Transport sweep: sources from the state's `(T, J, K)`, new moments from
/// the integral solution.
pub fn update_moments(state: &RadiationState, medium: &Medium, transport: &Transport, form: SourceForm, exec: Execution) -> Moments {
    let per_f = exec.map(medium.nf, |f| match form {
        SourceForm::Stokes => sweep_stokes(state, medium, transport.operator(f), f),
        SourceForm::Components => sweep_components(state, medium, transport.operator(f), f),
    });
    let mut m = Moments {
        j0: Vec::with_capacity(medium.nf * medium.nz),
        j2: Vec::with_capacity(medium.nf * medium.nz),
        k0: Vec::with_capacity(medium.nf * medium.nz),
        k2: Vec::with_capacity(medium.nf * medium.nz),
    };
    for [a, b, c, d] in per_f {
        m.j0.extend(a);
        m.j2.extend(b);
        m.k0.extend(c);
        m.k2.extend(d);
    }
    m
}
