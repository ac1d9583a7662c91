//! Agreement between the full system and its slow-manifold reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::{force_of_infection, integrate_full_at, FullState, Trajectory};
use crate::model::{neutral_equilibrium, realize_traits, NeutralEquilibrium, StrainParameters};
use crate::ode::SolverConfig;
use crate::scenario::Scenario;
use crate::slow::{integrate_replicator_at, invasion_fitness, ReplicatorTrajectory, SimplexState};

/// Errors below this are treated as solver noise when fitting a rate.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Burn-in before the reduction is started, in units of the fast decay
/// time `1/xi`.
pub const BURN_IN_FAST_TIMES: f64 = 10.0;

/// Fast/slow coordinates of a full state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowProjection {
    /// Slow variables as projected; their sum is one only on the manifold.
    pub z_raw: Vec<f64>,
    /// `z_raw` rescaled to unit sum.
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    /// `(S* − S)/ε`, absent when ε = 0.
    pub x_dev: Option<f64>,
    /// `(ΣI_i − I*)/ε`, absent when ε = 0.
    pub y_dev: Option<f64>,
    /// `L_i = ½ Σ_j (u_ij I_ij + u_ji I_ji)`, absent when ε = 0.
    pub l: Option<Vec<f64>>,
}

/// `(v_i, z_i) = P⁻¹ (I_i, J_i)` with `P = [[2T*, I*], [D*, T*]]`.
pub fn project_slow(state: &FullState, sp: &StrainParameters, eq: &NeutralEquilibrium) -> SlowProjection {
    let n = state.n();
    let j = force_of_infection(state, sp);
    let det = eq.det_p;
    let mut v = vec![0.0; n];
    let mut z_raw = vec![0.0; n];
    for i in 0..n {
        let ii = state.i_single[i];
        v[i] = (eq.t_star * ii - eq.i_star * j[i]) / det;
        z_raw[i] = (-eq.d_star * ii + 2.0 * eq.t_star * j[i]) / det;
    }
    let sum: f64 = z_raw.iter().sum();
    let z = if sum != 0.0 {
        z_raw.iter().map(|x| x / sum).collect()
    } else {
        z_raw.clone()
    };

    let eps = sp.epsilon;
    let (x_dev, y_dev, l) = if eps > 0.0 {
        let total_single: f64 = state.i_single.iter().sum();
        // Recover the co-clearance deviations from the realized rates.
        let gamma = eq.params.gamma;
        let u = |a: usize, b: usize| (sp.gamma_ij[(a, b)] / gamma - 1.0) / eps;
        let l = (0..n)
            .map(|i| {
                0.5 * (0..n)
                    .map(|k| u(i, k) * state.i_double[(i, k)] + u(k, i) * state.i_double[(k, i)])
                    .sum::<f64>()
            })
            .collect();
        (
            Some((eq.s_star - state.s) / eps),
            Some((total_single - eq.i_star) / eps),
            Some(l),
        )
    } else {
        (None, None, None)
    };

    SlowProjection {
        z_raw,
        z,
        v,
        x_dev,
        y_dev,
        l,
    }
}

/// `|S − S*| + Σ|I_i − I* z_i| + Σ|I_ij − (k I* T*/S*) z_i z_j|`.
pub fn manifold_error(state: &FullState, z: &[f64], eq: &NeutralEquilibrium) -> f64 {
    let n = state.n();
    let scale = eq.double_scale();
    let mut e = (state.s - eq.s_star).abs();
    for i in 0..n {
        e += (state.i_single[i] - eq.i_star * z[i]).abs();
        for j in 0..n {
            e += (state.i_double[(i, j)] - scale * z[i] * z[j]).abs();
        }
    }
    e
}

/// Error norm at every point of `tau_grid`, matching full time `τ/ε`.
pub fn reduction_error_profile(
    full: &Trajectory,
    reduced: &ReplicatorTrajectory,
    eq: &NeutralEquilibrium,
    epsilon: f64,
    tau_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "reduction error needs epsilon > 0"));
    }
    tau_grid
        .iter()
        .map(|&tau| {
            let t = tau / epsilon;
            let kf = find_time(&full.times, t)
                .ok_or_else(|| Error::GridCoverage(format!("full trajectory has no sample at t = {t} (tau = {tau})")))?;
            let kr = find_time(&reduced.times, tau)
                .ok_or_else(|| Error::GridCoverage(format!("reduced trajectory has no sample at tau = {tau}")))?;
            Ok(manifold_error(&full.states[kf], &reduced.states[kr], eq))
        })
        .collect()
}

/// Largest error norm over `tau_grid`.
pub fn reduction_error(
    full: &Trajectory,
    reduced: &ReplicatorTrajectory,
    eq: &NeutralEquilibrium,
    epsilon: f64,
    tau_grid: &[f64],
) -> Result<f64> {
    Ok(reduction_error_profile(full, reduced, eq, epsilon, tau_grid)?
        .into_iter()
        .fold(0.0, f64::max))
}

fn find_time(times: &[f64], t: f64) -> Option<usize> {
    let tol = 1e-9 * t.abs().max(1.0);
    let k = times.partition_point(|&x| x < t - tol);
    (k < times.len() && (times[k] - t).abs() <= tol).then_some(k)
}

/// Paired full and reduced runs on a common slow-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub epsilon: f64,
    /// Burn-in time at which the reduction starts.
    pub t_burn: f64,
    pub tau0: f64,
    pub z0: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub full: Trajectory,
    pub reduced: ReplicatorTrajectory,
    pub errors: Vec<f64>,
    pub max_error: f64,
}

/// Integrates the full system from the scenario's initial state, projects
/// onto the slow variables after a burn-in of `10/xi`, starts the
/// replicator there and compares both on `samples + 1` points of
/// `[tau0, tau_end]`.
pub fn compare_systems(
    scenario: &Scenario,
    epsilon: f64,
    tau_end: f64,
    samples: usize,
    full_cfg: &SolverConfig,
    reduced_cfg: &SolverConfig,
) -> Result<Comparison> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "comparison needs epsilon > 0"));
    }
    let params = &scenario.neutral;
    let pert = &scenario.perturbations;
    let eq = neutral_equilibrium(params, pert.mask)?;
    let sp = realize_traits(params, pert, epsilon)?;
    let lam = invasion_fitness(pert, &eq)?;

    let tau0 = epsilon * BURN_IN_FAST_TIMES / eq.xi;
    if !(tau_end > tau0) {
        return Err(Error::invalid(
            "tau_end",
            format!("must exceed the burn-in slow time {tau0}"),
        ));
    }
    let samples = samples.max(1);
    let tau_grid: Vec<f64> = (0..=samples)
        .map(|k| {
            if k == samples {
                tau_end
            } else {
                tau0 + (tau_end - tau0) * k as f64 / samples as f64
            }
        })
        .collect();
    let t_grid: Vec<f64> = tau_grid.iter().map(|tau| tau / epsilon).collect();
    let t_burn = t_grid[0];

    let state0 = scenario.initial_state()?;
    let full = integrate_full_at(&state0, &sp, params, 0.0, &t_grid, full_cfg)?;
    let z0 = project_slow(&full.states[0], &sp, &eq).z;
    let z0_state = SimplexState::normalized(&z0.iter().map(|x| x.max(0.0)).collect::<Vec<_>>())?;
    let reduced = integrate_replicator_at(&z0_state, &lam, eq.theta_total, tau0, &tau_grid, reduced_cfg)?;
    let errors = reduction_error_profile(&full, &reduced, &eq, epsilon, &tau_grid)?;
    let max_error = errors.iter().copied().fold(0.0, f64::max);

    Ok(Comparison {
        epsilon,
        t_burn,
        tau0,
        z0: z0_state.z,
        tau_grid,
        full,
        reduced,
        errors,
        max_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub errors: Vec<f64>,
    pub tau0s: Vec<f64>,
    pub tau_end: f64,
    /// Least-squares slope of `ln(error)` against `ln(ε)`; absent when
    /// degenerate.
    pub fitted_slope: Option<f64>,
    pub intercept: Option<f64>,
    pub residuals: Vec<f64>,
    /// True when there is nothing to fit: empty mask or errors at the
    /// noise floor.
    pub degenerate: bool,
}

/// Runs [`compare_systems`] for each `ε` (in parallel on the current rayon
/// pool) over `[tau0, tau_end]` and fits the convergence order.
pub fn epsilon_scaling_study(
    scenario: &Scenario,
    epsilons: &[f64],
    tau_end: f64,
    samples: usize,
    full_cfg: &SolverConfig,
) -> Result<ScalingReport> {
    let mut eps = epsilons.to_vec();
    if eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::invalid("epsilons", "must all be finite and > 0"));
    }
    eps.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    eps.dedup();
    if eps.len() < 3 {
        return Err(Error::invalid("epsilons", "need at least 3 distinct values"));
    }
    if eps[0] / eps[eps.len() - 1] < 4.0 {
        return Err(Error::invalid("epsilons", "must span at least a factor of 4"));
    }

    let reduced_cfg = SolverConfig::with_tolerances(full_cfg.rtol.min(1e-10), full_cfg.atol.min(1e-12));
    let runs = eps
        .par_iter()
        .map(|&e| compare_systems(scenario, e, tau_end, samples, full_cfg, &reduced_cfg))
        .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = runs.iter().map(|c| c.max_error).collect();
    let tau0s = runs.iter().map(|c| c.tau0).collect();
    let degenerate = scenario.perturbations.mask.is_empty() || errors.iter().all(|e| *e < NOISE_FLOOR);

    let (fitted_slope, intercept, residuals) = if degenerate || errors.iter().any(|e| *e <= 0.0) {
        (None, None, Vec::new())
    } else {
        let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let (slope, icept) = least_squares(&xs, &ys);
        let res = xs.iter().zip(&ys).map(|(x, y)| y - (icept + slope * x)).collect();
        (Some(slope), Some(icept), res)
    };

    Ok(ScalingReport {
        epsilons: eps,
        errors,
        tau0s,
        tau_end,
        fitted_slope,
        intercept,
        residuals,
        degenerate,
    })
}

/// Slope and intercept of the ordinary least-squares line.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::full::slow_manifold_state;
    use crate::model::{NeutralParameters, TraitMask, TraitPerturbations};
    use proptest::prelude::*;

    fn reference() -> NeutralParameters {
        NeutralParameters::new(4.0, 1.0, 1.0, 1.5).unwrap()
    }

    #[test]
    fn manifold_point_projects_exactly() {
        let p = reference();
        let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
        let sp = realize_traits(&p, &TraitPerturbations::neutral(3, TraitMask::EMPTY), 0.0).unwrap();
        let z = [0.2, 0.5, 0.3];
        let proj = project_slow(&slow_manifold_state(&eq, &z), &sp, &eq);
        for i in 0..3 {
            assert!(proj.v[i].abs() < 1e-15);
            assert!((proj.z_raw[i] - z[i]).abs() < 1e-15);
        }
        assert!(proj.x_dev.is_none());
    }

    #[test]
    fn single_strain_projects_to_one() {
        let p = reference();
        let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
        let sp = realize_traits(&p, &TraitPerturbations::neutral(1, TraitMask::EMPTY), 0.0).unwrap();
        let proj = project_slow(&slow_manifold_state(&eq, &[1.0]), &sp, &eq);
        assert!((proj.z[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_time_matching() {
        assert_eq!(find_time(&[0.0, 1.0, 2.0], 1.0), Some(1));
        assert_eq!(find_time(&[0.0, 1.0, 2.0], 1.5), None);
        assert_eq!(find_time(&[0.0, 1.0, 2.0], 2.0 + 1e-12), Some(2));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let xs: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|e| e.ln()).collect();
        let ys: Vec<f64> = [0.1f64, 0.05, 0.025].iter().map(|e| (3.0 * e).ln()).collect();
        let (s, _) = least_squares(&xs, &ys);
        assert!((s - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_inverts_forward_map(
            raw in prop::collection::vec(0.0f64..0.1, 1 + 3 + 9),
        ) {
            let p = reference();
            let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
            let sp = realize_traits(&p, &TraitPerturbations::neutral(3, TraitMask::EMPTY), 0.0).unwrap();
            let state = FullState::from_flat(3, &raw).unwrap();
            let proj = project_slow(&state, &sp, &eq);
            let j = force_of_infection(&state, &sp);
            for i in 0..3 {
                let ii = 2.0 * eq.t_star * proj.v[i] + eq.i_star * proj.z_raw[i];
                let jj = eq.d_star * proj.v[i] + eq.t_star * proj.z_raw[i];
                prop_assert!((ii - state.i_single[i]).abs() <= 1e-12);
                prop_assert!((jj - j[i]).abs() <= 1e-12);
            }
        }
    }
}
