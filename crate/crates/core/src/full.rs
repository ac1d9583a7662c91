//! The full compartment model: susceptibles, singly colonized hosts `I_i`
//! and ordered co-colonized hosts `I_ij` (strain `i` acquired first).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{NeutralEquilibrium, NeutralParameters, StrainParameters};
use crate::ode::{self, Constraint, IntegrationStats, OdeSystem, SolverConfig};

/// Host fractions in each of the `1 + N + N²` compartments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub s: f64,
    pub i_single: Vec<f64>,
    pub i_double: SquareMatrix,
}

impl FullState {
    pub fn disease_free(n: usize) -> Self {
        Self {
            s: 1.0,
            i_single: vec![0.0; n],
            i_double: SquareMatrix::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.i_single.len()
    }

    pub fn dim(n: usize) -> usize {
        1 + n + n * n
    }

    /// Flat layout `[S, I_1..I_N, I_11, I_12, .., I_NN]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(Self::dim(self.n()));
        y.push(self.s);
        y.extend_from_slice(&self.i_single);
        y.extend_from_slice(self.i_double.as_slice());
        y
    }

    pub fn from_flat(n: usize, y: &[f64]) -> Result<Self> {
        if y.len() != Self::dim(n) {
            return Err(Error::Dimension(format!(
                "flat state has length {}, expected {} for n = {n}",
                y.len(),
                Self::dim(n)
            )));
        }
        Ok(Self {
            s: y[0],
            i_single: y[1..=n].to_vec(),
            i_double: SquareMatrix::from_flat(n, y[1 + n..].to_vec())?,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.s + self.i_single.iter().sum::<f64>() + self.i_double.sum()
    }

    /// Checks non-negativity and that total mass does not exceed one by
    /// more than `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.i_double.n() != self.n() {
            return Err(Error::Dimension(format!(
                "i_double is {0}x{0} but i_single has {1} entries",
                self.i_double.n(),
                self.n()
            )));
        }
        let flat = self.to_flat();
        if let Some((idx, v)) = flat.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(
                "state",
                format!("component {idx} is {v}, compartments must be finite and >= 0"),
            ));
        }
        let mass = self.total_mass();
        if mass > 1.0 + tol {
            return Err(Error::invalid("state", format!("total mass {mass} exceeds 1")));
        }
        Ok(())
    }
}

/// Sampled solution of the full system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FullState>,
    pub stats: IntegrationStats,
}

/// Effective transmitting fraction for each strain:
/// `J_i = I_i + Σ_j (p_ij^i I_ij + p_ji^i I_ji)`, where `p_ji^i` is the
/// share of strain `i` transmitted from a (j then i) host.
pub fn force_of_infection(state: &FullState, sp: &StrainParameters) -> Vec<f64> {
    let n = state.n();
    let mut j = vec![0.0; n];
    force_of_infection_flat(n, &state.to_flat(), sp, &mut j);
    j
}

fn force_of_infection_flat(n: usize, y: &[f64], sp: &StrainParameters, out: &mut [f64]) {
    let single = &y[1..=n];
    let double = &y[1 + n..];
    let p = sp.p_ij_i.as_slice();
    out.copy_from_slice(single);
    for a in 0..n {
        for b in 0..n {
            let idx = a * n + b;
            let ab = double[idx];
            if ab != 0.0 {
                out[a] += p[idx] * ab;
                out[b] += (1.0 - p[idx]) * ab;
            }
        }
    }
}

/// Right-hand side of the full system as an ODE.
#[derive(Debug, Clone)]
pub struct FullSystem<'a> {
    pub sp: &'a StrainParameters,
    pub params: &'a NeutralParameters,
}

impl OdeSystem for FullSystem<'_> {
    fn dim(&self) -> usize {
        FullState::dim(self.sp.n())
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.sp.n();
        let r = self.params.r;
        let sp = self.sp;
        let mut force = vec![0.0; n];
        force_of_infection_flat(n, y, sp, &mut force);
        for (f, b) in force.iter_mut().zip(&sp.beta_i) {
            *f *= b;
        }
        let s = y[0];
        let single = &y[1..=n];
        let double = &y[1 + n..];
        let gij = sp.gamma_ij.as_slice();
        let kij = sp.k_ij.as_slice();

        let total_force: f64 = force.iter().sum();
        let mut ds = r * (1.0 - s) - s * total_force;
        for i in 0..n {
            ds += sp.gamma_i[i] * single[i];
            let mut co = 0.0;
            for j in 0..n {
                let idx = i * n + j;
                ds += gij[idx] * double[idx];
                co += kij[idx] * force[j];
                dy[1 + n + idx] = kij[idx] * single[i] * force[j] - (r + gij[idx]) * double[idx];
            }
            dy[1 + i] = force[i] * s - (r + sp.gamma_i[i]) * single[i] - single[i] * co;
        }
        dy[0] = ds;
    }
}

/// Time derivative of every compartment.
pub fn full_rhs(state: &FullState, sp: &StrainParameters, params: &NeutralParameters) -> FullState {
    let n = state.n();
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    FullSystem { sp, params }.rhs(0.0, &y, &mut dy);
    FullState::from_flat(n, &dy).expect("derivative has the state layout")
}

/// Integrates on a uniform grid of `samples + 1` points over `[0, t_end]`.
pub fn integrate_full(
    state0: &FullState,
    sp: &StrainParameters,
    params: &NeutralParameters,
    t_end: f64,
    samples: usize,
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::invalid("t_end", format!("must be finite and > 0, got {t_end}")));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be >= 1"));
    }
    integrate_full_at(state0, sp, params, 0.0, &uniform_grid(0.0, t_end, samples), cfg)
}

/// Integrates from `(t0, state0)` and samples at the given times.
pub fn integrate_full_at(
    state0: &FullState,
    sp: &StrainParameters,
    params: &NeutralParameters,
    t0: f64,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<Trajectory> {
    let n = sp.n();
    if state0.n() != n {
        return Err(Error::Dimension(format!(
            "state has {} strains, parameters have {n}",
            state0.n()
        )));
    }
    state0.validate(1e-9)?;
    let sys = FullSystem { sp, params };
    let sol = ode::integrate(&sys, t0, &state0.to_flat(), times, cfg, Constraint::NonNegative)?;
    let states = sol
        .states
        .iter()
        .map(|y| FullState::from_flat(n, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: sol.times,
        states,
        stats: sol.stats,
    })
}

/// `samples + 1` equally spaced points from `a` to `b`, endpoints exact.
pub fn uniform_grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    let samples = samples.max(1);
    (0..=samples)
        .map(|i| {
            if i == samples {
                b
            } else {
                a + (b - a) * i as f64 / samples as f64
            }
        })
        .collect()
}

/// Aggregate prevalences `(T, I, D)`: total colonized, singly colonized
/// and co-colonized.
pub fn neutral_scalar_observables(state: &FullState) -> (f64, f64, f64) {
    let i: f64 = state.i_single.iter().sum();
    let d = state.i_double.sum();
    (i + d, i, d)
}

/// Point on the slow manifold for frequencies `z`:
/// `S = S*`, `I_i = I* z_i`, `I_ij = (k I* T* / S*) z_i z_j`.
pub fn slow_manifold_state(eq: &NeutralEquilibrium, z: &[f64]) -> FullState {
    let scale = eq.double_scale();
    FullState {
        s: eq.s_star,
        i_single: z.iter().map(|zi| eq.i_star * zi).collect(),
        i_double: SquareMatrix::from_fn(z.len(), |i, j| scale * z[i] * z[j]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{neutral_equilibrium, realize_traits, TraitMask, TraitPerturbations};

    fn reference() -> NeutralParameters {
        NeutralParameters::new(4.0, 1.0, 1.0, 1.5).unwrap()
    }

    fn neutral_sp(n: usize) -> StrainParameters {
        realize_traits(&reference(), &TraitPerturbations::neutral(n, TraitMask::EMPTY), 0.0).unwrap()
    }

    #[test]
    fn force_of_infection_hand_value() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(2, TraitMask::from_indices(&[4]).unwrap());
        // p_12^1 = 0.6 and p_21^1 = 1 - p_21^2 = 0.5.
        pert.omega[(0, 1)] = 1.0;
        let sp = realize_traits(&p, &pert, 0.1).unwrap();
        let state = FullState {
            s: 0.3,
            i_single: vec![0.3, 0.0],
            i_double: SquareMatrix::from_rows(vec![vec![0.0, 0.1], vec![0.2, 0.0]]).unwrap(),
        };
        let j = force_of_infection(&state, &sp);
        assert!((j[0] - 0.46).abs() < 1e-15);
        assert!((j[1] - (0.4 * 0.1 + 0.5 * 0.2)).abs() < 1e-15);
    }

    #[test]
    fn force_of_infection_without_coinfection() {
        let state = FullState {
            s: 0.5,
            i_single: vec![0.2, 0.3],
            i_double: SquareMatrix::zeros(2),
        };
        assert_eq!(force_of_infection(&state, &neutral_sp(2)), vec![0.2, 0.3]);
    }

    #[test]
    fn neutral_force_sums_to_prevalence() {
        let state = FullState {
            s: 0.4,
            i_single: vec![0.1, 0.05, 0.1],
            i_double: SquareMatrix::from_fn(3, |i, j| 0.01 * (1 + i + 2 * j) as f64),
        };
        let j: f64 = force_of_infection(&state, &neutral_sp(3)).iter().sum();
        let (t, _, _) = neutral_scalar_observables(&state);
        assert!((j - t).abs() < 1e-15);
    }

    #[test]
    fn observables_hand_value() {
        let state = FullState {
            s: 0.6,
            i_single: vec![0.1, 0.1],
            i_double: SquareMatrix::from_fn(2, |_, _| 0.05),
        };
        let (t, i, d) = neutral_scalar_observables(&state);
        assert!((t - 0.4).abs() < 1e-15);
        assert!((i - 0.2).abs() < 1e-15);
        assert!((d - 0.2).abs() < 1e-15);
        assert_eq!(neutral_scalar_observables(&FullState::disease_free(2)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn disease_free_is_stationary() {
        let d = full_rhs(&FullState::disease_free(3), &neutral_sp(3), &reference());
        assert!(d.to_flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_mass_derivative_sums_to_zero() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(3, TraitMask::ALL);
        pert.b = vec![0.2, -0.4, 0.1];
        pert.nu = vec![-0.3, 0.5, 0.0];
        pert.u = SquareMatrix::from_fn(3, |i, j| 0.1 * (i as f64 - j as f64 + 0.5));
        pert.omega = SquareMatrix::from_fn(3, |i, j| 0.2 * ((i * j) as f64 - 1.0));
        pert.alpha = SquareMatrix::from_fn(3, |i, j| 0.3 * (i as f64 - 0.5 * j as f64));
        let sp = realize_traits(&p, &pert, 0.1).unwrap();
        let state = FullState {
            s: 0.4,
            i_single: vec![0.1, 0.15, 0.05],
            i_double: SquareMatrix::from_fn(3, |_, _| 0.3 / 9.0),
        };
        let d = full_rhs(&state, &sp, &p);
        let total: f64 = d.to_flat().iter().sum();
        assert!(total.abs() < 1e-15, "{total}");
    }

    #[test]
    fn neutral_slow_manifold_is_stationary_in_aggregates() {
        let p = reference();
        let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
        let z = [0.5, 0.2, 0.3];
        let state = slow_manifold_state(&eq, &z);
        assert!((state.total_mass() - 1.0).abs() < 1e-15);
        let d = full_rhs(&state, &neutral_sp(3), &p);
        assert!(d.s.abs() < 1e-12);
        let (dt, _, _) = neutral_scalar_observables(&d);
        assert!(dt.abs() < 1e-12);
        // The manifold is invariant in the neutral system.
        assert!(d.to_flat().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn flat_round_trip() {
        let state = FullState {
            s: 0.5,
            i_single: vec![0.1, 0.2],
            i_double: SquareMatrix::from_fn(2, |i, j| 0.01 * (i + 2 * j) as f64),
        };
        assert_eq!(FullState::from_flat(2, &state.to_flat()).unwrap(), state);
        assert!(FullState::from_flat(2, &[0.0; 6]).is_err());
    }

    #[test]
    fn grid_endpoints_exact() {
        let g = uniform_grid(0.3, 10.7, 7);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], 0.3);
        assert_eq!(g[7], 10.7);
    }
}
