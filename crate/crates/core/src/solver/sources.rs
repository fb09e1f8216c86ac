use crate::solver::state::{Medium, RadiationState};

/// Sources `S = S0 + mu^2 S2` of the `I~` equation and `S' = S'0 + mu^2 S'2`
/// of the `Q~` equation at one frequency, per altitude.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sources {
    pub s0: Vec<f64>,
    pub s2: Vec<f64>,
    pub q0: Vec<f64>,
    pub q2: Vec<f64>,
}

/// Sources of the `I~_l` and `I~_r` equations at one frequency, per altitude.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentSources {
    pub l0: Vec<f64>,
    pub l2: Vec<f64>,
    pub r0: Vec<f64>,
    pub r2: Vec<f64>,
}

/// Rayleigh anisotropy `J2 - J0/3 - K0 + K2` at `(f, i)`.
#[inline]
pub(crate) fn anisotropy(state: &RadiationState, p: usize) -> f64 {
    state.j2[p] - state.j0[p] / 3.0 - state.k0[p] + state.k2[p]
}

/// Emission plus isotropic scattering, `kappa_a B~(T) + kappa_s J0`.
#[inline]
pub(crate) fn emission(state: &RadiationState, medium: &Medium, f: usize, i: usize) -> f64 {
    let p = f * medium.nz + i;
    medium.kappa_a[p] * medium.planck_tilde(f, i, state.t[i]) + medium.kappa_s[p] * state.j0[p]
}

/// Assemble `S0, S2, S'0, S'2` from the state's temperature and moments.
pub fn assemble_sources(state: &RadiationState, medium: &Medium, f: usize) -> Sources {
    let nz = medium.nz;
    let mut out = Sources {
        s0: vec![0.0; nz],
        s2: vec![0.0; nz],
        q0: vec![0.0; nz],
        q2: vec![0.0; nz],
    };
    for i in 0..nz {
        let p = f * nz + i;
        let x = medium.beta * medium.kappa_s[p] * anisotropy(state, p);
        out.s0[i] = emission(state, medium, f, i) - 0.375 * x;
        out.s2[i] = 1.125 * x;
        out.q0[i] = -1.125 * x;
        out.q2[i] = 1.125 * x;
    }
    out
}

/// Assemble the sources of the `(I~_l, I~_r)` pair, using
/// `J'_k = (J_k + K_k)/2` and `K'_k = (J_k - K_k)/2`.
pub fn assemble_sources_linear(state: &RadiationState, medium: &Medium, f: usize) -> ComponentSources {
    let nz = medium.nz;
    let mut out = ComponentSources {
        l0: vec![0.0; nz],
        l2: vec![0.0; nz],
        r0: vec![0.0; nz],
        r2: vec![0.0; nz],
    };
    let beta = medium.beta;
    for i in 0..nz {
        let p = f * nz + i;
        let ks = medium.kappa_s[p];
        let (jl0, jl2) = (0.5 * (state.j0[p] + state.k0[p]), 0.5 * (state.j2[p] + state.k2[p]));
        let jr0 = 0.5 * (state.j0[p] - state.k0[p]);
        let thermal = 0.5 * medium.kappa_a[p] * medium.planck_tilde(f, i, state.t[i]);
        let iso = 0.5 * (1.0 - beta) * ks * (jl0 + jr0);
        out.l0[i] = 1.5 * beta * ks * (jl0 - jl2) + iso + thermal;
        out.l2[i] = 0.75 * beta * ks * (3.0 * jl2 - 2.0 * jl0 + jr0);
        out.r0[i] = 0.75 * beta * ks * (jl2 + jr0) + iso + thermal;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::RefractiveProfile;
    use crate::physics::FrequencyGrid;
    use crate::solver::scenario::{AtmosphereScenario, KappaModel};

    fn medium(beta: f64) -> Medium {
        let mut s = AtmosphereScenario::case1(KappaModel::Constant(0.5), RefractiveProfile::cloud_slab(0.01).unwrap());
        s.beta = beta;
        s.z = AtmosphereScenario::uniform_grid(11);
        s.freq = FrequencyGrid::geometric(0.05, 5.0, 6).unwrap();
        Medium::new(&s).unwrap()
    }

    fn generic_state(m: &Medium) -> RadiationState {
        let mut st = RadiationState::cold(m);
        for p in 0..st.j0.len() {
            let x = p as f64;
            st.j0[p] = 1.0 + 0.3 * (0.7 * x).sin();
            st.j2[p] = 0.4 + 0.1 * (1.3 * x).cos();
            st.k0[p] = 0.05 * (0.4 * x).sin();
            st.k2[p] = 0.03 * (0.9 * x).cos();
        }
        st.t.iter_mut().enumerate().for_each(|(i, t)| *t = 0.05 + 0.001 * i as f64);
        st
    }

    #[test]
    fn isotropic_radiation_gives_pure_emission() {
        let m = medium(0.5);
        let st = RadiationState::hot(&m, 0.07);
        for f in 0..m.nf {
            let s = assemble_sources(&st, &m, f);
            for i in 0..m.nz {
                let p = f * m.nz + i;
                let kappa = m.kappa_a[p] + m.kappa_s[p];
                assert!((s.s0[i] - kappa * st.j0[p]).abs() <= 1e-14 * s.s0[i].abs());
                assert!(s.s2[i].abs() < 1e-14 * s.s0[i].abs().max(1e-300));
            }
        }
    }

    #[test]
    fn isotropic_scattering_has_no_anisotropic_sources() {
        let m = medium(0.0);
        let st = generic_state(&m);
        let s = assemble_sources(&st, &m, 2);
        assert!(s.s2.iter().chain(&s.q0).chain(&s.q2).all(|&v| v == 0.0));
        let cold = RadiationState::cold(&m);
        assert!(assemble_sources(&cold, &m, 0).s0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn component_sources_recombine() {
        let m = medium(0.5);
        let st = generic_state(&m);
        for f in 0..m.nf {
            let s = assemble_sources(&st, &m, f);
            let c = assemble_sources_linear(&st, &m, f);
            for i in 0..m.nz {
                let tol = 1e-13 * (1.0 + s.s0[i].abs());
                assert!((c.l0[i] + c.r0[i] - s.s0[i]).abs() < tol);
                assert!((c.l2[i] + c.r2[i] - s.s2[i]).abs() < tol);
                assert!((c.l0[i] - c.r0[i] - s.q0[i]).abs() < tol);
                assert!((c.l2[i] - c.r2[i] - s.q2[i]).abs() < tol);
            }
        }
    }

    #[test]
    fn component_sources_are_nonnegative_for_physical_moments() {
        // moments of nonnegative (I_l, I_r) distributions
        let m = medium(1.0);
        let mut st = RadiationState::cold(&m);
        for p in 0..st.j0.len() {
            let (a, b) = (1.0 + (p % 3) as f64, 0.5 + (p % 5) as f64 * 0.2);
            // I_l = a mu^2, I_r = b: J'_0 = a/3, J'_2 = a/5, K'_0 = b, K'_2 = b/3
            st.j0[p] = a / 3.0 + b;
            st.k0[p] = a / 3.0 - b;
            st.j2[p] = a / 5.0 + b / 3.0;
            st.k2[p] = a / 5.0 - b / 3.0;
        }
        for f in 0..m.nf {
            let c = assemble_sources_linear(&st, &m, f);
            for i in 0..m.nz {
                for mu2 in [0.0, 0.25, 1.0] {
                    assert!(c.l0[i] + mu2 * c.l2[i] >= 0.0);
                    assert!(c.r0[i] + mu2 * c.r2[i] >= 0.0);
                }
            }
        }
    }
}
