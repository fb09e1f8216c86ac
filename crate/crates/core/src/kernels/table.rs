use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::path::{diagonal_point, eta_powers, AltitudeShape, OpticalPath};
use crate::kernels::quadrature::{MuNode, QuadratureSpec};
use crate::optics::{admissibility, eta_sq, RefractiveProfile};
use crate::par::Execution;

const MAGIC: &[u8; 8] = b"VRTEKT01";
const NORD: usize = 3;

/// Trapezoid weights of a (possibly nonuniform) altitude grid.
pub fn trapezoid_weights(z: &[f64]) -> Vec<f64> {
    let n = z.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { z[0] } else { z[i - 1] };
            let hi = if i + 1 == n { z[n - 1] } else { z[i + 1] };
            0.5 * (hi - lo)
        })
        .collect()
}

/// The kappa-independent part of every kernel on an altitude grid: for each
/// `(z_i, z_j)` the admissible angular nodes, their reduced optical depth
/// `int shape/eta` and the arrival cosine `eta(mu, z_i, z_j)`.
///
/// Since `kappa(nu, z) = kappa_nu shape(z)`, any kernel value is then a
/// single weighted sum of `exp(-kappa_nu * depth)`.
#[derive(Debug, Clone)]
pub struct KernelGeometry {
    z: Vec<f64>,
    cells: Vec<f64>,
    mu_lo: Vec<f64>,
    offsets: Vec<usize>,
    weight: Vec<f64>,
    depth: Vec<f64>,
    eta: Vec<f64>,
    diag_nodes: Vec<Vec<MuNode>>,
    sides: Vec<[f64; 2]>,
    shape_at: Vec<f64>,
}

struct Row {
    offsets: Vec<usize>,
    weight: Vec<f64>,
    depth: Vec<f64>,
    eta: Vec<f64>,
}

impl KernelGeometry {
    pub fn build(
        z: &[f64],
        profile: &RefractiveProfile,
        shape: AltitudeShape,
        quad: &QuadratureSpec,
        dz_inner: f64,
        exec: Execution,
    ) -> Result<Self> {
        if z.len() < 2 || z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("altitude grid must have >= 2 strictly increasing nodes".into()));
        }
        if !(dz_inner > 0.0) {
            return Err(Error::Domain(format!("inner step must be > 0, got {dz_inner}")));
        }
        let nz = z.len();
        let mu_lo: Vec<f64> = z.iter().map(|&zi| admissibility(zi, profile).mu_hi).collect();
        let diag_nodes: Vec<Vec<MuNode>> = mu_lo.iter().map(|&lo| quad.nodes(lo)).collect();
        let rows: Vec<Row> = exec.map(nz, |i| {
            let nzi = profile.n(z[i]);
            let mut row = Row {
                offsets: Vec::with_capacity(nz),
                weight: Vec::new(),
                depth: Vec::new(),
                eta: Vec::new(),
            };
            for j in 0..nz {
                row.offsets.push(row.weight.len());
                if j == i {
                    continue;
                }
                let path = OpticalPath::new(z[i], z[j], 1.0, shape, profile).with_step(dz_inner);
                let nzj = profile.n(z[j]);
                for node in &diag_nodes[i] {
                    let s = eta_sq(node.mu, nzi, nzj);
                    if s <= 0.0 {
                        continue;
                    }
                    if let Some(d) = path.depth(node.mu) {
                        row.weight.push(node.weight);
                        row.depth.push(d);
                        row.eta.push(s.sqrt());
                    }
                }
            }
            row
        });
        let total: usize = rows.iter().map(|r| r.weight.len()).sum();
        let mut g = Self {
            z: z.to_vec(),
            cells: trapezoid_weights(z),
            mu_lo,
            offsets: Vec::with_capacity(nz * nz + 1),
            weight: Vec::with_capacity(total),
            depth: Vec::with_capacity(total),
            eta: Vec::with_capacity(total),
            diag_nodes,
            sides: (0..nz)
                .map(|i| {
                    let l = if i == 0 { 0.0 } else { 0.5 * (z[i] - z[i - 1]) };
                    let r = if i + 1 == nz { 0.0 } else { 0.5 * (z[i + 1] - z[i]) };
                    [l, r]
                })
                .collect(),
            shape_at: z.iter().map(|&zi| shape.value(zi)).collect(),
        };
        for row in rows {
            let base = g.weight.len();
            g.offsets.extend(row.offsets.iter().map(|o| o + base));
            g.weight.extend(row.weight);
            g.depth.extend(row.depth);
            g.eta.extend(row.eta);
        }
        g.offsets.push(g.weight.len());
        Ok(g)
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Lower end `mu*` of the angular integral at `z_i`.
    pub fn mu_lo(&self, i: usize) -> f64 {
        self.mu_lo[i]
    }

    /// Trapezoid cell length around `z_i`.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Point values `E_k(kappa_nu; z_i, z_j)` for `k = 1, 3, 5`.
    pub fn point(&self, i: usize, j: usize, kappa_nu: f64) -> [f64; 3] {
        if i == j {
            let lo = self.mu_lo[i];
            return [diagonal_point(0, lo), diagonal_point(1, lo), diagonal_point(2, lo)];
        }
        let p = i * self.z.len() + j;
        let (a, b) = (self.offsets[p], self.offsets[p + 1]);
        let mut acc = [0.0; 3];
        for q in a..b {
            let e = self.weight[q] * (-kappa_nu * self.depth[q]).exp();
            let pw = eta_powers(self.eta[q]);
            for k in 0..NORD {
                acc[k] += e * pw[k];
            }
        }
        acc
    }

    /// Kernel averaged in `z'` over the trapezoid cell of `z_i`, with the
    /// absorption frozen at `z_i` inside the cell.
    pub fn diag_average(&self, i: usize, kappa_nu: f64) -> [f64; 3] {
        let g = kappa_nu * self.shape_at[i];
        let mut acc = [0.0; 3];
        for node in &self.diag_nodes[i] {
            let mut f = 0.0;
            for &a in &self.sides[i] {
                if a > 0.0 {
                    let x = g * a / node.mu;
                    f += if x < 1e-12 { a } else { a * -(-x).exp_m1() / x };
                }
            }
            let pw = eta_powers(node.mu);
            for k in 0..NORD {
                acc[k] += node.weight * f * pw[k];
            }
        }
        acc.map(|v| v / self.cells[i])
    }

    /// Discretized integral operators for one `kappa_nu`, kernels evaluated directly.
    pub fn operator(&self, kappa_nu: f64) -> KernelOperator {
        KernelOperator::assemble(self.z.len(), &self.cells, |i, j| {
            if i == j {
                self.diag_average(i, kappa_nu)
            } else {
                self.point(i, j, kappa_nu)
            }
        }, |i, j| self.point(i, j, kappa_nu))
    }
}

/// `int_0^Z E_k(z_i, z') f(z') dz'` as dense matrices, plus the boundary
/// kernels `E_3, E_5` towards `z = 0` and `z = Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    nz: usize,
    w: Vec<f64>,
    ground: [Vec<f64>; 2],
    top: [Vec<f64>; 2],
}

impl KernelOperator {
    fn assemble(
        nz: usize,
        cells: &[f64],
        cell_value: impl Fn(usize, usize) -> [f64; 3],
        point: impl Fn(usize, usize) -> [f64; 3],
    ) -> Self {
        let mut w = vec![0.0; NORD * nz * nz];
        let mut ground = [vec![0.0; nz], vec![0.0; nz]];
        let mut top = [vec![0.0; nz], vec![0.0; nz]];
        for i in 0..nz {
            for j in 0..nz {
                let v = cell_value(i, j);
                for k in 0..NORD {
                    w[(k * nz + i) * nz + j] = cells[j] * v[k];
                }
            }
            let g = point(i, 0);
            let t = point(i, nz - 1);
            for k in 0..2 {
                ground[k][i] = g[k + 1];
                top[k][i] = t[k + 1];
            }
        }
        Self { nz, w, ground, top }
    }

    pub fn len(&self) -> usize {
        self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.nz == 0
    }

    /// `out_i += scale * sum_j W^k_ij f_j` for kernel index `kidx` (0, 1, 2 for k = 1, 3, 5).
    #[inline]
    pub fn apply_add(&self, kidx: usize, f: &[f64], scale: f64, out: &mut [f64]) {
        let n = self.nz;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.w[(kidx * n + i) * n..(kidx * n + i + 1) * n];
            let s: f64 = row.iter().zip(f).map(|(a, b)| a * b).sum();
            *o += scale * s;
        }
    }

    /// `E_3` (`m = 0`) or `E_5` (`m = 1`) from `z_i` towards the ground.
    pub fn ground(&self, m: usize) -> &[f64] {
        &self.ground[m]
    }

    /// `E_3` (`m = 0`) or `E_5` (`m = 1`) from `z_i` towards the top.
    pub fn top(&self, m: usize) -> &[f64] {
        &self.top[m]
    }

    /// Row `i` of the weight matrix for kernel index `kidx`.
    pub fn row(&self, kidx: usize, i: usize) -> &[f64] {
        let n = self.nz;
        &self.w[(kidx * n + i) * n..(kidx * n + i + 1) * n]
    }
}

/// Kernel values tabulated on the altitude grid for a log-spaced set of
/// `kappa_nu`, looked up by log-log interpolation in `kappa_nu` and
/// bilinear interpolation in `(z, z')`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    z: Vec<f64>,
    kappa: Vec<f64>,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl KernelTable {
    pub const DEFAULT_KAPPA_NODES: usize = 50;

    /// Tabulate on `n_kappa` log-spaced values covering `[kappa_min, kappa_max]`.
    pub fn build(geometry: &KernelGeometry, kappa_min: f64, kappa_max: f64, n_kappa: usize, exec: Execution) -> Result<Self> {
        if !(kappa_min > 0.0) || !(kappa_max >= kappa_min) || !kappa_max.is_finite() {
            return Err(Error::Domain(format!("bad kappa range [{kappa_min}, {kappa_max}]")));
        }
        if n_kappa < 2 {
            return Err(Error::Domain("a kernel table needs at least two kappa nodes".into()));
        }
        let (lo, hi) = if kappa_max / kappa_min < 1.0 + 1e-6 {
            (kappa_min / 1.5, kappa_max * 1.5)
        } else {
            (kappa_min, kappa_max)
        };
        let step = (hi / lo).ln() / (n_kappa - 1) as f64;
        let mut kappa: Vec<f64> = (0..n_kappa).map(|c| lo * (step * c as f64).exp()).collect();
        kappa[n_kappa - 1] = hi;

        let nz = geometry.len();
        let block = NORD * n_kappa * nz;
        let mut values = vec![0.0; nz * block];
        exec.fill_chunks(&mut values, block, |i, out| {
            for (c, &kv) in kappa.iter().enumerate() {
                for j in 0..nz {
                    let p = geometry.point(i, j, kv);
                    for k in 0..NORD {
                        out[(k * n_kappa + c) * nz + j] = p[k];
                    }
                }
            }
        });
        let mut diag = vec![0.0; nz * NORD * n_kappa];
        exec.fill_chunks(&mut diag, NORD * n_kappa, |i, out| {
            for (c, &kv) in kappa.iter().enumerate() {
                let d = geometry.diag_average(i, kv);
                for k in 0..NORD {
                    out[k * n_kappa + c] = d[k];
                }
            }
        });
        Ok(Self {
            z: geometry.z().to_vec(),
            kappa,
            values,
            diag,
        })
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn kappa_nodes(&self) -> &[f64] {
        &self.kappa
    }

    /// Raw stored values; layout `((i * 3 + k) * n_kappa + c) * nz + j`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn kappa_locate(&self, kappa_nu: f64) -> (usize, f64) {
        let n = self.kappa.len();
        let t = (kappa_nu / self.kappa[0]).ln() / (self.kappa[n - 1] / self.kappa[0]).ln() * (n - 1) as f64;
        let t = t.clamp(0.0, (n - 1) as f64);
        let c = (t.floor() as usize).min(n - 2);
        let (a, b) = (self.kappa[c], self.kappa[c + 1]);
        (c, ((kappa_nu - a) / (b - a)).clamp(0.0, 1.0))
    }

    fn interp(a: f64, b: f64, f: f64) -> f64 {
        if f == 0.0 {
            a
        } else if a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() {
            ((1.0 - f) * a.ln() + f * b.ln()).exp()
        } else {
            (1.0 - f) * a + f * b
        }
    }

    /// On-grid point value, interpolated in `kappa_nu`.
    pub fn value_at(&self, kidx: usize, i: usize, j: usize, kappa_nu: f64) -> f64 {
        let (nk, nz) = (self.kappa.len(), self.z.len());
        let (c, f) = self.kappa_locate(kappa_nu);
        let base = (i * NORD + kidx) * nk;
        let a = self.values[(base + c) * nz + j];
        let b = self.values[(base + c + 1) * nz + j];
        Self::interp(a, b, f)
    }

    /// Cell-averaged diagonal value, interpolated in `kappa_nu`.
    pub fn diag_at(&self, kidx: usize, i: usize, kappa_nu: f64) -> f64 {
        let nk = self.kappa.len();
        let (c, f) = self.kappa_locate(kappa_nu);
        let base = (i * NORD + kidx) * nk;
        Self::interp(self.diag[base + c], self.diag[base + c + 1], f)
    }

    fn z_locate(&self, z: f64) -> (usize, f64) {
        let n = self.z.len();
        if z <= self.z[0] {
            return (0, 0.0);
        }
        if z >= self.z[n - 1] {
            return (n - 2, 1.0);
        }
        let i = (self.z.partition_point(|&v| v <= z) - 1).min(n - 2);
        (i, (z - self.z[i]) / (self.z[i + 1] - self.z[i]))
    }

    /// `E_k(kappa_nu; z, z')` for arbitrary altitudes. On the diagonal the
    /// stored point value of `E_1` is infinite, and so is any interpolant
    /// that touches it.
    pub fn value(&self, k: u32, z: f64, zp: f64, kappa_nu: f64) -> Result<f64> {
        let kidx = crate::kernels::order_index(k)?;
        let (i, fi) = self.z_locate(z);
        let (j, fj) = self.z_locate(zp);
        let mut acc = 0.0;
        for (di, wi) in [(0, 1.0 - fi), (1, fi)] {
            for (dj, wj) in [(0, 1.0 - fj), (1, fj)] {
                let w = wi * wj;
                if w != 0.0 {
                    acc += w * self.value_at(kidx, i + di, j + dj, kappa_nu);
                }
            }
        }
        Ok(acc)
    }

    /// Discretized integral operators for one `kappa_nu` from the table.
    pub fn operator(&self, kappa_nu: f64) -> KernelOperator {
        let cells = trapezoid_weights(&self.z);
        KernelOperator::assemble(
            self.z.len(),
            &cells,
            |i, j| {
                if i == j {
                    [0, 1, 2].map(|k| self.diag_at(k, i, kappa_nu))
                } else {
                    [0, 1, 2].map(|k| self.value_at(k, i, j, kappa_nu))
                }
            },
            |i, j| [0, 1, 2].map(|k| self.value_at(k, i, j, kappa_nu)),
        )
    }

    /// Binary image: magic, `u64` sizes, then little-endian `f64` arrays.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * (self.z.len() + self.kappa.len() + self.values.len() + self.diag.len()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.z.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.kappa.len() as u64).to_le_bytes());
        for v in self.z.iter().chain(&self.kappa).chain(&self.values).chain(&self.diag) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Data(format!("kernel table image: {m}"));
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("wrong magic"));
        }
        let mut word = [0u8; 8];
        let mut read_u64 = |b: &mut &[u8]| -> Result<usize> {
            b.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
            usize::try_from(u64::from_le_bytes(word)).map_err(|_| bad("size overflow"))
        };
        let nz = read_u64(&mut bytes)?;
        let nk = read_u64(&mut bytes)?;
        let counts = [nz, nk, nz * NORD * nk * nz, nz * NORD * nk];
        let need: usize = counts.iter().sum::<usize>() * 8;
        if bytes.len() != need {
            return Err(bad(&format!("expected {need} payload bytes, found {}", bytes.len())));
        }
        let mut arrays = counts.iter().map(|&n| {
            let (head, tail) = bytes.split_at(n * 8);
            bytes = tail;
            head.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
                .collect::<Vec<f64>>()
        });
        let (z, kappa, values, diag) = (
            arrays.next().unwrap_or_default(),
            arrays.next().unwrap_or_default(),
            arrays.next().unwrap_or_default(),
            arrays.next().unwrap_or_default(),
        );
        if nz < 2 || nk < 2 {
            return Err(bad("grid too small"));
        }
        Ok(Self { z, kappa, values, diag })
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Result of comparing table lookups with direct kernel sums.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGate {
    pub probes: usize,
    pub max_rel_error: f64,
    /// `(k, i, j, kappa_nu)` of the worst probe.
    pub worst: (u32, usize, usize, f64),
}

impl TableGate {
    pub const THRESHOLD: f64 = 5e-3;

    pub fn passed(&self) -> bool {
        self.max_rel_error < Self::THRESHOLD
    }
}

/// Probe random off-diagonal grid pairs at random `kappa_nu` inside the
/// table range and compare interpolated with directly summed kernels.
pub fn table_gate(geometry: &KernelGeometry, table: &KernelTable, probes: usize, seed: u64) -> TableGate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nz = geometry.len();
    let (lo, hi) = (table.kappa[0].ln(), table.kappa[table.kappa.len() - 1].ln());
    let mut gate = TableGate {
        probes,
        max_rel_error: 0.0,
        worst: (1, 0, 0, 0.0),
    };
    for _ in 0..probes {
        let i = rng.random_range(0..nz);
        let mut j = rng.random_range(0..nz - 1);
        if j >= i {
            j += 1;
        }
        let kappa_nu = rng.random_range(lo..hi).exp();
        let direct = geometry.point(i, j, kappa_nu);
        for kidx in 0..NORD {
            let t = table.value_at(kidx, i, j, kappa_nu);
            let err = ((t - direct[kidx]) / direct[kidx]).abs();
            if err > gate.max_rel_error {
                gate.max_rel_error = err;
                gate.worst = (crate::kernels::ORDERS[kidx], i, j, kappa_nu);
            }
        }
    }
    gate
}
