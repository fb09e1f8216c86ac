//! Brute-force reference for the isotropic, constant-index limit.
//!
//! Plane-parallel slab on `[0, 1]`, frequency independent absorption `kappa`
//! and albedo `a`, isotropic scattering, unit refractive index. The ground
//! sends `c_e B(T_g) mu` upward and nothing enters at the top. With the
//! angular integral done in closed form the mean intensity is
//!
//! `J0(z) = (c_e/2) B(T_g) E3(kappa z) + (kappa/2) int E1(kappa |z - y|) S(y) dy`,
//! `S = (1 - a) B(T) + a J0`,
//!
//! and radiative equilibrium asks `int (B(T) - J0) dnu = 0` at every altitude.
//! Nothing here depends on the solver crate.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("invalid setup: {0}")]
    Setup(String),
    #[error("singular scattering operator")]
    Singular,
    #[error("no convergence after {iterations} iterations (last change {change:.3e})")]
    NotConverged { iterations: usize, change: f64 },
}

/// `E_n(x)` for `n >= 1`, `x >= 0`.
pub fn expn(n: u32, x: f64) -> f64 {
    assert!(n >= 1 && x >= 0.0);
    if x == 0.0 {
        return if n == 1 { f64::INFINITY } else { 1.0 / (n - 1) as f64 };
    }
    let mut e = e1(x);
    for k in 1..n {
        e = ((-x).exp() - x * e) / k as f64;
    }
    e
}

fn e1(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    if x <= 1.0 {
        let (mut term, mut sum) = (1.0, 0.0);
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER - x.ln() + sum
    } else {
        // Modified Lentz on the continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `nu^3 / (exp(nu/T) - 1)`.
pub fn planck(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    nu.powi(3) / (nu / t).exp_m1()
}

fn planck_dt(nu: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x = nu / t;
    if x > 700.0 {
        return 0.0;
    }
    planck(nu, t) * x / t / (-(-x).exp_m1())
}

/// Problem data for [`IsotropicSlab::solve`].
#[derive(Debug, Clone)]
pub struct IsotropicSlab {
    pub kappa: f64,
    pub albedo: f64,
    pub c_e: f64,
    pub ground_temperature: f64,
    /// Altitude nodes, uniform on `[0, 1]`.
    pub nz: usize,
    /// Frequency nodes, geometric on `[nu_min, nu_max]`.
    pub nu_min: f64,
    pub nu_max: f64,
    pub nnu: usize,
}

impl IsotropicSlab {
    pub fn new(kappa: f64, albedo: f64, c_e: f64, ground_temperature: f64) -> Self {
        Self {
            kappa,
            albedo,
            c_e,
            ground_temperature,
            nz: 397,
            nu_min: 0.002,
            nu_max: 20.0,
            nnu: 400,
        }
    }

    pub fn z(&self) -> Vec<f64> {
        (0..self.nz).map(|i| i as f64 / (self.nz - 1) as f64).collect()
    }

    /// Nodes and trapezoid weights in `ln nu`.
    pub fn frequencies(&self) -> (Vec<f64>, Vec<f64>) {
        let h = (self.nu_max / self.nu_min).ln() / (self.nnu - 1) as f64;
        let nu: Vec<f64> = (0..self.nnu).map(|k| self.nu_min * (h * k as f64).exp()).collect();
        let w = nu
            .iter()
            .enumerate()
            .map(|(k, &v)| if k == 0 || k == self.nnu - 1 { 0.5 * h * v } else { h * v })
            .collect();
        (nu, w)
    }

    fn check(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::Setup(m.into()));
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if !(0.0..1.0).contains(&self.albedo) {
            return bad("albedo must lie in [0, 1)");
        }
        if self.nz < 3 || self.nnu < 2 || !(self.nu_min > 0.0 && self.nu_max > self.nu_min) {
            return bad("grids too small");
        }
        Ok(())
    }

    /// `W[i][j] = int_{cell j} E1(kappa |z_i - y|) dy`, cells centred on the nodes.
    pub fn cell_kernel(&self) -> DMatrix<f64> {
        let z = self.z();
        let h = 1.0 / (self.nz - 1) as f64;
        let k = self.kappa;
        let e2 = |x: f64| expn(2, x);
        DMatrix::from_fn(self.nz, self.nz, |i, j| {
            let (a, b) = ((z[j] - 0.5 * h).max(0.0), (z[j] + 0.5 * h).min(1.0));
            let zi = z[i];
            let v = if zi <= a {
                e2(k * (a - zi)) - e2(k * (b - zi))
            } else if zi >= b {
                e2(k * (zi - b)) - e2(k * (zi - a))
            } else {
                2.0 - e2(k * (zi - a)) - e2(k * (b - zi))
            };
            v / k
        })
    }

    /// Scattering resolved once: `J0(nu) = B(nu, T_g) u + K B(nu, T)`.
    fn operators(&self) -> Result<(DVector<f64>, DMatrix<f64>), OracleError> {
        let w = self.cell_kernel();
        let half = 0.5 * self.kappa;
        let a = self.albedo;
        let m = (DMatrix::identity(self.nz, self.nz) - &w * (half * a))
            .try_inverse()
            .ok_or(OracleError::Singular)?;
        let g = DVector::from_iterator(self.nz, self.z().iter().map(|&z| 0.5 * self.c_e * expn(3, self.kappa * z)));
        let u = &m * g;
        let k = (&m * &w) * (half * (1.0 - a));
        Ok((u, k))
    }

    /// Equilibrium temperature by iterating `T -> J0 -> T` until the largest
    /// change falls below `tol`.
    pub fn solve(&self, tol: f64, max_iter: usize) -> Result<OracleSolution, OracleError> {
        self.check()?;
        let (u, k) = self.operators()?;
        let (nu, w) = self.frequencies();
        let tg = self.ground_temperature;
        let mut t = vec![0.0; self.nz];
        for it in 1..=max_iter {
            let mut target = DVector::zeros(self.nz);
            for (f, &v) in nu.iter().enumerate() {
                let b = DVector::from_iterator(self.nz, t.iter().map(|&ti| planck(v, ti)));
                let j0 = &u * planck(v, tg) + &k * b;
                target.axpy(w[f], &j0, 1.0);
            }
            let next: Vec<f64> = (0..self.nz)
                .map(|i| invert_planck_sum(&nu, &w, target[i], t[i]))
                .collect();
            let change = next.iter().zip(&t).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            t = next;
            if change < tol {
                return Ok(OracleSolution {
                    z: self.z(),
                    t,
                    iterations: it,
                });
            }
            if it == max_iter {
                return Err(OracleError::NotConverged { iterations: it, change });
            }
        }
        Err(OracleError::NotConverged { iterations: 0, change: f64::NAN })
    }

    /// The same equilibrium from one linear solve on `P(T) = sum_nu w B(nu, T)`.
    pub fn solve_direct(&self) -> Result<OracleSolution, OracleError> {
        self.check()?;
        let (u, k) = self.operators()?;
        let (nu, w) = self.frequencies();
        let c: f64 = nu.iter().zip(&w).map(|(&v, &wi)| wi * planck(v, self.ground_temperature)).sum();
        let p = (DMatrix::identity(self.nz, self.nz) - k)
            .lu()
            .solve(&(u * c))
            .ok_or(OracleError::Singular)?;
        let t = p.iter().map(|&pi| invert_planck_sum(&nu, &w, pi, 0.0)).collect();
        Ok(OracleSolution {
            z: self.z(),
            t,
            iterations: 1,
        })
    }
}

/// Newton on `sum w B(nu, T) = target`, started from Stefan's law when `guess <= 0`.
fn invert_planck_sum(nu: &[f64], w: &[f64], target: f64, guess: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let pi = std::f64::consts::PI;
    let mut t = if guess > 0.0 { guess } else { (15.0 * target).powf(0.25) / pi };
    for _ in 0..100 {
        let (mut f, mut df) = (-target, 0.0);
        for (&v, &wi) in nu.iter().zip(w) {
            f += wi * planck(v, t);
            df += wi * planck_dt(v, t);
        }
        let step = f / df;
        let next = (t - step).max(0.5 * t);
        let done = (next - t).abs() <= 1e-15 * t;
        t = next;
        if done {
            break;
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub z: Vec<f64>,
    pub t: Vec<f64>,
    pub iterations: usize,
}

impl OracleSolution {
    /// Piecewise-linear temperature at `z`.
    pub fn at(&self, z: f64) -> f64 {
        let n = self.z.len();
        let x = z.clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (x.floor() as usize).min(n - 2);
        let f = x - i as f64;
        self.t[i] * (1.0 - f) + self.t[i + 1] * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // mpmath.expint(n, x), 30 digits.
    const EXPN: &[(u32, f64, f64)] = &[
        (1, 0.01, 4.037929576538114),
        (1, 0.5, 0.5597735947761608),
        (1, 3.0, 0.013048381094197037),
        (2, 0.5, 0.326643862324553),
        (3, 0.5, 0.22160436427517846),
        (3, 2.0, 0.03013337979781589),
    ];

    #[test]
    fn exponential_integrals() {
        for &(n, x, want) in EXPN {
            let got = expn(n, x);
            assert!(((got - want) / want).abs() < 1e-13, "E{n}({x}) = {got}, want {want}");
        }
        assert_eq!(expn(2, 0.0), 1.0);
        assert_eq!(expn(3, 0.0), 0.5);
    }

    #[test]
    fn kernel_rows_integrate_e1() {
        let s = IsotropicSlab::new(0.5, 0.0, 2.5, 0.0625);
        let w = s.cell_kernel();
        for (i, &z) in s.z().iter().enumerate() {
            let want = (2.0 - expn(2, 0.5 * z) - expn(2, 0.5 * (1.0 - z))) / 0.5;
            let got: f64 = w.row(i).sum();
            assert!((got - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn iteration_matches_linear_solve() {
        let mut s = IsotropicSlab::new(0.5, 0.3, 2.5, 300.0 / 4798.0);
        s.nz = 61;
        s.nnu = 120;
        let a = s.solve(1e-14, 500).unwrap();
        let b = s.solve_direct().unwrap();
        for (x, y) in a.t.iter().zip(&b.t) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn no_source_no_heat() {
        let s = IsotropicSlab {
            nz: 21,
            nnu: 50,
            ..IsotropicSlab::new(1.0, 0.2, 0.0, 0.06)
        };
        assert!(s.solve(1e-14, 10).unwrap().t.iter().all(|&t| t == 0.0));
    }
}
