//! Classical exponential integrals `E_n(x) = int_1^inf exp(-x t) t^-n dt`.

use crate::error::{Error, Result};

const EULER: f64 = 0.577_215_664_901_532_9;
const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Highest order supported by [`expint`].
pub const MAX_ORDER: u32 = 5;

/// `E_k(x)` for `k <= 5` and `x >= 0`.
///
/// `E_0(0)` and `E_1(0)` are `+inf`.
pub fn expint(k: u32, x: f64) -> Result<f64> {
    if k > MAX_ORDER {
        return Err(Error::Unsupported(format!("exponential integral order {k} > {MAX_ORDER}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("exponential integral argument must be >= 0, got {x}")));
    }
    Ok(expint_unchecked(k, x))
}

pub(crate) fn expint_unchecked(k: u32, x: f64) -> f64 {
    if k == 0 {
        return (-x).exp() / x;
    }
    if x == 0.0 {
        return if k == 1 { f64::INFINITY } else { 1.0 / (k - 1) as f64 };
    }
    if x > 1.0 {
        continued_fraction(k, x)
    } else {
        series(k, x)
    }
}

/// Modified Lentz evaluation of the continued fraction, good for `x > 1`.
fn continued_fraction(k: u32, x: f64) -> f64 {
    let nm1 = (k - 1) as f64;
    let mut b = x + k as f64;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let a = -(i as f64) * (nm1 + i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h * (-x).exp()
}

/// Power series around zero, good for `x <= 1`.
fn series(k: u32, x: f64) -> f64 {
    let nm1 = (k - 1) as i64;
    let mut ans = if nm1 != 0 {
        1.0 / nm1 as f64
    } else {
        -x.ln() - EULER
    };
    let mut fact = 1.0;
    for i in 1..MAX_ITER as i64 {
        fact *= -x / i as f64;
        let del = if i != nm1 {
            -fact / (i - nm1) as f64
        } else {
            let psi = -EULER + (1..=nm1).map(|j| 1.0 / j as f64).sum::<f64>();
            fact * (-x.ln() + psi)
        };
        ans += del;
        if del.abs() < ans.abs() * EPS {
            break;
        }
    }
    ans
}

/// `C_1(X) = int_0^X E_1(x) dx = 1 - E_2(X)`.
pub fn c1(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 - expint_unchecked(2, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an arbitrary precision evaluation (mpmath.expint, 30 digits).
    const REFERENCE: &[(u32, f64, f64)] = &[
        (1, 1e-6, 13.238295893062491),
        (1, 0.005, 4.726095458584443),
        (1, 0.25, 1.0442826344437382),
        (1, 1.0, 0.21938393439552027),
        (1, 1.5, 0.10001958240663265),
        (1, 5.0, 0.0011482955912753258),
        (1, 30.0, 3.0215520106888125e-15),
        (2, 0.1, 0.7225450221940205),
        (2, 1.0, 0.14849550677592205),
        (2, 4.0, 0.0031982292493385544),
        (3, 0.0, 0.5),
        (3, 0.3, 0.30004182656401436),
        (3, 1.0, 0.10969196719776014),
        (3, 2.5, 0.016295369376668827),
        (4, 0.7, 0.12678083009292157),
        (4, 8.0, 2.8672253709356157e-5),
        (5, 0.05, 0.23393867495012313),
        (5, 1.0, 0.070454237461720398),
        (5, 12.0, 3.6729506704547438e-7),
        (0, 2.0, 0.067667641618306346),
    ];

    #[test]
    fn matches_reference_values() {
        for &(k, x, v) in REFERENCE {
            let e = expint(k, x).unwrap();
            assert!(((e - v) / v).abs() < 1e-8, "E_{k}({x}) = {e}, want {v}");
        }
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(expint(3, 0.0).unwrap(), 0.5);
        for k in 2..=5 {
            assert_eq!(expint(k, 0.0).unwrap(), 1.0 / (k - 1) as f64);
        }
        assert!(expint(1, 0.0).unwrap().is_infinite());
    }

    #[test]
    fn domain_checks() {
        assert!(matches!(expint(1, -0.1), Err(Error::Domain(_))));
        assert!(matches!(expint(6, 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn recurrence_holds() {
        // k E_{k+1}(x) = exp(-x) - x E_k(x)
        for &x in &[0.01, 0.3, 0.99, 1.01, 2.0, 7.5] {
            for k in 1..5u32 {
                let lhs = k as f64 * expint_unchecked(k + 1, x);
                let rhs = (-x).exp() - x * expint_unchecked(k, x);
                assert!((lhs - rhs).abs() < 1e-13 * lhs.abs().max(1e-30) + 1e-15, "k={k} x={x}");
            }
        }
    }

    #[test]
    fn integral_of_e1_is_one_minus_e2() {
        // Gauss-Legendre on x = X s^3, which tames the log singularity at 0.
        let (nodes, weights) = gauss_legendre_20();
        let x_max = 1.0;
        let panels = 40;
        let mut total = 0.0;
        for p in 0..panels {
            let (a, b) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
            for (t, w) in nodes.iter().zip(&weights) {
                let s = 0.5 * (a + b) + 0.5 * (b - a) * t;
                let jac = 3.0 * x_max * s * s * 0.5 * (b - a);
                total += w * jac * expint_unchecked(1, x_max * s * s * s);
            }
        }
        assert!((total - c1(1.0)).abs() < 1e-8, "{total} vs {}", c1(1.0));
        assert!(c1(1.0) < 1.0);
    }

    fn gauss_legendre_20() -> (Vec<f64>, Vec<f64>) {
        // Newton iteration on Legendre polynomial roots.
        let n = 20;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            loop {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    nodes.push(x);
                    weights.push(2.0 / ((1.0 - x * x) * dp * dp));
                    break;
                }
            }
        }
        (nodes, weights)
    }
}
