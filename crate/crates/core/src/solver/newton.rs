use crate::error::{Error, Result};
use crate::par::Execution;
use crate::physics::{planck_dt_unchecked, planck_unchecked};
use crate::solver::state::Medium;

const MAX_NEWTON: usize = 60;
const REL_TOL: f64 = 1e-12;

/// Solve `sum_nu w kappa_a (B~_nu(T) - J0) = 0` at one altitude by a
/// Newton iteration safeguarded with bisection on `[0, T_hot]`.
pub fn newton_point(medium: &Medium, j0: &[f64], i: usize, t_prev: f64) -> Result<f64> {
    let nz = medium.nz;
    let mut target = 0.0;
    for f in 0..medium.nf {
        let v = j0[f * nz + i];
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite J0 at frequency index {f}, altitude index {i}")));
        }
        target += medium.nu_weight[f] * medium.kappa_a[f * nz + i] * v;
    }
    if target <= 0.0 {
        return Ok(0.0);
    }
    let eval = |t: f64| {
        let (mut g, mut dg) = (0.0, 0.0);
        for f in 0..medium.nf {
            let w = medium.nu_weight[f] * medium.kappa_a[f * nz + i] / medium.n_sq[i];
            g += w * planck_unchecked(medium.nu[f], t);
            dg += w * planck_dt_unchecked(medium.nu[f], t);
        }
        (g - target, dg)
    };

    let (mut lo, mut hi) = (0.0, t_prev.max(1e-3));
    let mut doublings = 0;
    while eval(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::Newton {
                z_index: i,
                msg: format!("no upper bracket found (target {target:e})"),
            });
        }
    }
    let mut t = if t_prev > lo && t_prev < hi { t_prev } else { 0.5 * (lo + hi) };
    for _ in 0..MAX_NEWTON {
        let (g, dg) = eval(t);
        if g.abs() <= REL_TOL * target {
            return Ok(t);
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = t - g / dg;
        t = if dg > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(t);
        }
    }
    let (g, _) = eval(t);
    if g.abs() <= 1e3 * REL_TOL * target {
        return Ok(t);
    }
    Err(Error::Newton {
        z_index: i,
        msg: format!("residual {:e} after {MAX_NEWTON} iterations (target {target:e})", g.abs()),
    })
}

/// Temperature profile in thermal equilibrium with `J0` (layout `f * nz + i`).
pub fn newton_temperature(medium: &Medium, j0: &[f64], t_prev: &[f64], exec: Execution) -> Result<Vec<f64>> {
    exec.map(medium.nz, |i| newton_point(medium, j0, i, t_prev[i]))
        .into_iter()
        .collect()
}

/// `max_z |sum_nu w kappa_a (B~(T) - J0)|` and `max_z sum_nu w kappa_a J0`.
pub fn closure_residual(medium: &Medium, j0: &[f64], t: &[f64]) -> (f64, f64) {
    let nz = medium.nz;
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..nz {
        let (mut r, mut s) = (0.0, 0.0);
        for f in 0..medium.nf {
            let w = medium.nu_weight[f] * medium.kappa_a[f * nz + i];
            r += w * (medium.planck_tilde(f, i, t[i]) - j0[f * nz + i]);
            s += w * j0[f * nz + i];
        }
        res = res.max(r.abs());
        scale = scale.max(s);
    }
    (res, scale)
}
