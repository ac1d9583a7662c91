//! Slow-time frequency dynamics: pairwise invasion fitness and the
//! replicator system on the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::uniform_grid;
use crate::matrix::SquareMatrix;
use crate::model::{neutral_equilibrium, NeutralEquilibrium, Trait, TraitMask, TraitPerturbations};
use crate::ode::{self, Constraint, IntegrationStats, OdeSystem, SolverConfig};

/// Tolerance on `|Σz − 1|` for a valid simplex point.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// `lambda[(i, j)]` is the invasion fitness of strain `i` into a resident
/// population of strain `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvasionFitnessMatrix {
    pub n: usize,
    pub lambda: SquareMatrix,
}

impl InvasionFitnessMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lambda[(i, j)]
    }
}

/// Strain frequencies on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    pub z: Vec<f64>,
}

impl SimplexState {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::invalid("z", "needs at least one strain"));
        }
        if let Some(v) = z.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid("z", format!("frequency {v} is negative or non-finite")));
        }
        let sum: f64 = z.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid("z", format!("frequencies sum to {sum}, expected 1")));
        }
        Ok(Self { z })
    }

    /// Rescales non-negative weights to unit sum.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("z", "weights must be non-negative with positive sum"));
        }
        Self::new(weights.iter().map(|w| w / sum).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            z: vec![1.0 / n as f64; n],
        }
    }

    pub fn vertex(n: usize, k: usize) -> Self {
        let mut z = vec![0.0; n];
        z[k] = 1.0;
        Self { z }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }
}

/// Pairwise invasion fitness from the trait deviations, weighted by the
/// normalized trait speeds of `eq`.
pub fn invasion_fitness(pert: &TraitPerturbations, eq: &NeutralEquilibrium) -> Result<InvasionFitnessMatrix> {
    pert.validate()?;
    if pert.mask != eq.mask {
        return Err(Error::MaskMismatch {
            perturbations: pert.mask.to_string(),
            equilibrium: eq.mask.to_string(),
        });
    }
    let n = pert.n;
    let [t1, t2, t3, t4, t5] = eq.theta_norm;
    let mu = eq.mu;
    let (b, nu, u, w, a) = (&pert.b, &pert.nu, &pert.u, &pert.omega, &pert.alpha);
    let lambda = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let mut l = 0.0;
        if t1 != 0.0 {
            l += t1 * (b[i] - b[j]);
        }
        if t2 != 0.0 {
            l += t2 * (nu[j] - nu[i]);
        }
        if t3 != 0.0 {
            l += t3 * (-u[(i, j)] - u[(j, i)] + 2.0 * u[(j, j)]);
        }
        if t4 != 0.0 {
            l += t4 * (w[(i, j)] - w[(j, i)]);
        }
        if t5 != 0.0 {
            l += t5 * (mu * (a[(j, i)] - a[(i, j)]) + a[(j, i)] - a[(j, j)]);
        }
        l
    });
    Ok(InvasionFitnessMatrix { n, lambda })
}

/// `dz_i/dτ = Θ z_i ((Λz)_i − zᵀΛz)`.
pub fn replicator_rhs(z: &[f64], lam: &InvasionFitnessMatrix, theta_total: f64) -> Vec<f64> {
    let mut dz = vec![0.0; z.len()];
    replicator_rhs_into(z, lam, theta_total, &mut dz);
    dz
}

fn replicator_rhs_into(z: &[f64], lam: &InvasionFitnessMatrix, theta_total: f64, dz: &mut [f64]) {
    let lz = lam.lambda.mul_vec(z);
    let mean: f64 = lz.iter().zip(z).map(|(a, b)| a * b).sum();
    for i in 0..z.len() {
        dz[i] = theta_total * z[i] * (lz[i] - mean);
    }
}

struct Replicator<'a> {
    lam: &'a InvasionFitnessMatrix,
    theta_total: f64,
}

impl OdeSystem for Replicator<'_> {
    fn dim(&self) -> usize {
        self.lam.n
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        replicator_rhs_into(y, self.lam, self.theta_total, dy);
    }
}

/// Sampled replicator solution in slow time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicatorTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

impl ReplicatorTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Integrates on `samples + 1` uniform points of `[0, tau_end]`.
pub fn integrate_replicator(
    z0: &SimplexState,
    lam: &InvasionFitnessMatrix,
    theta_total: f64,
    tau_end: f64,
    samples: usize,
    cfg: &SolverConfig,
) -> Result<ReplicatorTrajectory> {
    if !(tau_end.is_finite() && tau_end > 0.0) {
        return Err(Error::invalid("tau_end", format!("must be finite and > 0, got {tau_end}")));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be >= 1"));
    }
    integrate_replicator_at(z0, lam, theta_total, 0.0, &uniform_grid(0.0, tau_end, samples), cfg)
}

/// Integrates from `(tau0, z0)` and samples at the given slow times.
pub fn integrate_replicator_at(
    z0: &SimplexState,
    lam: &InvasionFitnessMatrix,
    theta_total: f64,
    tau0: f64,
    times: &[f64],
    cfg: &SolverConfig,
) -> Result<ReplicatorTrajectory> {
    if z0.n() != lam.n {
        return Err(Error::Dimension(format!(
            "initial frequencies have {} strains, fitness matrix has {}",
            z0.n(),
            lam.n
        )));
    }
    let sys = Replicator { lam, theta_total };
    let sol = ode::integrate(&sys, tau0, &z0.z, times, cfg, Constraint::Simplex)?;
    Ok(ReplicatorTrajectory {
        times: sol.times,
        states: sol.states,
        stats: sol.stats,
    })
}

/// Slow dynamics when only trait `d` varies, written directly in its
/// specialized form rather than through the fitness matrix. The speed is
/// the unmasked `Θ_d` of `eq`'s neutral parameters.
pub fn per_trait_slow_rhs(z: &[f64], pert: &TraitPerturbations, eq: &NeutralEquilibrium, d: u8) -> Result<Vec<f64>> {
    let t = Trait::from_index(d)?;
    let n = z.len();
    if pert.n != n {
        return Err(Error::Dimension(format!("z has {n} strains, perturbations have {}", pert.n)));
    }
    let single = neutral_equilibrium(&eq.params, TraitMask::from_traits(&[t]))?;
    let theta = single.theta(t);
    let dot = |v: &[f64]| v.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();

    let dz = match t {
        Trait::Transmission => {
            let mean = dot(&pert.b);
            (0..n).map(|i| theta * z[i] * (pert.b[i] - mean)).collect()
        }
        Trait::Clearance => {
            let mean = dot(&pert.nu);
            (0..n).map(|i| theta * z[i] * (-pert.nu[i] + mean)).collect()
        }
        Trait::CoClearance => {
            let u = &pert.u;
            let mut quad = 0.0;
            for j in 0..n {
                for l in 0..n {
                    quad += (u[(j, l)] + u[(l, j)]) * z[l] * z[j];
                }
            }
            (0..n)
                .map(|i| {
                    let lin: f64 = (0..n).map(|j| (u[(i, j)] + u[(j, i)]) * z[j]).sum();
                    theta * z[i] * (-lin + quad)
                })
                .collect()
        }
        Trait::MixedTransmission => {
            let w = &pert.omega;
            (0..n)
                .map(|i| theta * z[i] * (0..n).map(|j| (w[(i, j)] - w[(j, i)]) * z[j]).sum::<f64>())
                .collect()
        }
        Trait::CoVulnerability => {
            let a = &pert.alpha;
            let ratio_t = single.t_star / single.d_star;
            let ratio_i = single.i_star / single.d_star;
            let quad = a.quadratic_form(z);
            (0..n)
                .map(|i| {
                    let lin: f64 = (0..n).map(|j| (ratio_t * a[(j, i)] - ratio_i * a[(i, j)]) * z[j]).sum();
                    theta * z[i] * (lin - quad)
                })
                .collect()
        }
    };
    Ok(dz)
}
