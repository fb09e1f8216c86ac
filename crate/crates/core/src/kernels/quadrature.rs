use crate::error::{Error, Result};

/// Angular quadrature for the generalized exponential integrals.
///
/// On `[mu_lo, 1]`, with `u = mu - mu_lo`, nodes are squared
/// (`u = t^2`, uniform in `t`) for `u < mu_switch` and uniform above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub delta_mu: f64,
    pub mu_switch: f64,
    pub delta_mu_oracle: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            delta_mu: 0.01,
            mu_switch: 0.1,
            delta_mu_oracle: 1.0 / 800.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuNode {
    pub mu: f64,
    pub weight: f64,
}

impl QuadratureSpec {
    pub fn new(delta_mu: f64, mu_switch: f64) -> Result<Self> {
        let q = Self {
            delta_mu,
            mu_switch,
            ..Self::default()
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_mu > 0.0 && self.delta_mu <= 0.05) {
            return Err(Error::Domain(format!("delta_mu must lie in (0, 0.05], got {}", self.delta_mu)));
        }
        if !(self.mu_switch >= 0.0 && self.mu_switch <= 1.0) {
            return Err(Error::Domain(format!("mu_switch must lie in [0, 1], got {}", self.mu_switch)));
        }
        if !(self.delta_mu_oracle > 0.0 && self.delta_mu_oracle < self.delta_mu) {
            return Err(Error::Domain(format!(
                "oracle step {} must be positive and finer than delta_mu {}",
                self.delta_mu_oracle, self.delta_mu
            )));
        }
        Ok(())
    }

    /// Same regime switch, step `delta_mu`.
    pub fn with_step(self, delta_mu: f64) -> Self {
        Self { delta_mu, ..self }
    }

    /// The fine reference rule.
    pub fn oracle(self) -> Self {
        self.with_step(self.delta_mu_oracle)
    }

    /// Nodes and weights for `int_{mu_lo}^1 f(mu) dmu`.
    pub fn nodes(&self, mu_lo: f64) -> Vec<MuNode> {
        let len = 1.0 - mu_lo;
        if !(len > 0.0) {
            return Vec::new();
        }
        let us = self.mu_switch.min(len);
        let mut out = Vec::new();
        if us > 0.0 {
            let root = us.sqrt();
            let n1 = ((root / self.delta_mu).ceil() as usize).max(1);
            let dt = root / n1 as f64;
            for j in 0..n1 {
                let t = (j as f64 + 0.5) * dt;
                out.push(MuNode {
                    mu: mu_lo + t * t,
                    weight: 2.0 * t * dt,
                });
            }
        }
        let rest = len - us;
        if rest > 0.0 {
            let n2 = ((rest / self.delta_mu - 1e-9).ceil() as usize).max(1);
            let du = rest / n2 as f64;
            for j in 0..n2 {
                out.push(MuNode {
                    mu: mu_lo + us + (j as f64 + 0.5) * du,
                    weight: du,
                });
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        let q = QuadratureSpec::default();
        for lo in [0.0, 0.05, 0.14, 0.5, 0.95] {
            let s: f64 = q.nodes(lo).iter().map(|n| n.weight).sum();
            assert!((s - (1.0 - lo)).abs() < 1e-13, "lo={lo} sum={s}");
        }
        assert!(q.nodes(1.0).is_empty());
    }

    #[test]
    fn integrates_monomials() {
        let q = QuadratureSpec::default().oracle();
        let s: f64 = q.nodes(0.0).iter().map(|n| n.weight * n.mu).sum();
        assert!((s - 0.5).abs() < 1e-6);
        // first node sits at (delta/2)^2 above the lower end
        let first = q.nodes(0.2)[0];
        assert!(first.mu > 0.2 && first.mu < 0.2 + 1e-5);
    }

    #[test]
    fn validation() {
        assert!(QuadratureSpec::new(0.01, 0.1).is_ok());
        assert!(QuadratureSpec::new(0.1, 0.1).is_err());
        assert!(QuadratureSpec::new(0.0, 0.1).is_err());
        assert!(QuadratureSpec::new(0.01, 1.5).is_err());
    }
}
