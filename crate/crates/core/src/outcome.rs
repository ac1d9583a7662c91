//! Competitive outcome classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{NeutralEquilibrium, Trait, TraitMask, TraitPerturbations};
use crate::slow::{InvasionFitnessMatrix, ReplicatorTrajectory};

pub const DEFAULT_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
/// Per-strain max−min over the window below which a limit counts as a
/// fixed point.
pub const AMPLITUDE_TOL: f64 = 1e-4;

/// Two-strain outcome from the signs of `(λ_1^2, λ_2^1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairwiseOutcome {
    /// Each strain invades the other.
    Coexistence,
    /// Strain 1 invades and resists invasion: strain 2 is excluded.
    ExclusionOf1,
    /// Strain 2 invades and resists invasion: strain 1 is excluded.
    ExclusionOf2,
    /// Neither strain invades the other.
    Bistability,
}

impl PairwiseOutcome {
    /// 0-based index of the sole survivor, for the exclusion outcomes.
    pub fn survivor(self) -> Option<usize> {
        match self {
            PairwiseOutcome::ExclusionOf1 => Some(0),
            PairwiseOutcome::ExclusionOf2 => Some(1),
            _ => None,
        }
    }
}

/// `(+,+)` coexistence, `(+,−)` strain 1 wins, `(−,+)` strain 2 wins,
/// `(−,−)` bistability. A zero or non-finite entry is rejected.
pub fn classify_pair(l12: f64, l21: f64) -> Result<PairwiseOutcome> {
    if !(l12.is_finite() && l21.is_finite()) || l12 == 0.0 || l21 == 0.0 {
        return Err(Error::NonGeneric(format!(
            "sign pair ({l12}, {l21}) lies on a classification boundary"
        )));
    }
    Ok(match (l12 > 0.0, l21 > 0.0) {
        (true, true) => PairwiseOutcome::Coexistence,
        (true, false) => PairwiseOutcome::ExclusionOf1,
        (false, true) => PairwiseOutcome::ExclusionOf2,
        (false, false) => PairwiseOutcome::Bistability,
    })
}

/// Outcome for every unordered pair `i < j`; `None` on the boundary.
pub fn pairwise_outcomes(lam: &InvasionFitnessMatrix) -> Vec<(usize, usize, Option<PairwiseOutcome>)> {
    let mut out = Vec::new();
    for i in 0..lam.n {
        for j in i + 1..lam.n {
            out.push((i, j, classify_pair(lam.get(i, j), lam.get(j, i)).ok()));
        }
    }
    out
}

/// Strain maximizing `Θ_1 b_i − Θ_2 ν_i` (0-based). Only defined when the
/// active traits are a subset of transmission and clearance.
pub fn predict_exclusion_winner(pert: &TraitPerturbations, eq: &NeutralEquilibrium) -> Result<usize> {
    let allowed = TraitMask::from_traits(&[Trait::Transmission, Trait::Clearance]);
    if !pert.mask.is_subset_of(allowed) {
        return Err(Error::invalid(
            "mask",
            format!("exclusion winner needs a mask within {{1,2}}, got {}", pert.mask),
        ));
    }
    if pert.mask != eq.mask {
        return Err(Error::MaskMismatch {
            perturbations: pert.mask.to_string(),
            equilibrium: eq.mask.to_string(),
        });
    }
    let scores = exclusion_scores(pert, eq);
    if scores.len() == 1 {
        return Ok(0);
    }
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let ties = scores.iter().filter(|s| **s == scores[best]).count();
    if ties > 1 {
        return Err(Error::NonGeneric(format!(
            "{ties} strains share the maximal score {}",
            scores[best]
        )));
    }
    Ok(best)
}

/// `Θ_1 b_i − Θ_2 ν_i` for every strain, with masked-off terms dropped.
pub fn exclusion_scores(pert: &TraitPerturbations, eq: &NeutralEquilibrium) -> Vec<f64> {
    let t1 = eq.theta(Trait::Transmission);
    let t2 = eq.theta(Trait::Clearance);
    pert.b.iter().zip(&pert.nu).map(|(b, nu)| t1 * b - t2 * nu).collect()
}

/// `zᵀ Ū z` with `Ū` the symmetric part of `u`.
pub fn symmetric_lyapunov(z: &[f64], u: &SquareMatrix) -> f64 {
    // zᵀUz equals zᵀŪz since the antisymmetric part contributes nothing.
    let sym = SquareMatrix::from_fn(u.n(), |i, j| 0.5 * (u[(i, j)] + u[(j, i)]));
    sym.quadratic_form(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LimitKind {
    FixedPoint,
    Cycle,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    /// 0-based strain indices, ascending.
    pub persistent_set: Vec<usize>,
    pub limit_kind: LimitKind,
    pub final_frequencies: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Strains whose minimum frequency over the trailing `window` of slow time
/// exceeds `threshold`, and whether they settle or keep oscillating.
pub fn detect_persistent_set(traj: &ReplicatorTrajectory, threshold: f64, window: f64) -> Result<OutcomeReport> {
    let (Some(&first), Some(&last)) = (traj.times.first(), traj.times.last()) else {
        return Err(Error::invalid("trajectory", "is empty"));
    };
    let span = last - first;
    if !(window > 0.0) || window > span {
        return Err(Error::WindowTooLong { window, span });
    }
    let start = last - window;
    let idx: Vec<usize> = (0..traj.times.len()).filter(|&k| traj.times[k] >= start).collect();
    let n = traj.states[0].len();
    let mid = last - window / 2.0;

    let mut persistent = Vec::new();
    let mut amplitude = vec![0.0; n];
    let mut amp_first = vec![0.0; n];
    let mut amp_second = vec![0.0; n];
    for i in 0..n {
        let range = |pred: &dyn Fn(f64) -> bool| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &k in &idx {
                if pred(traj.times[k]) {
                    let v = traj.states[k][i];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            (lo, hi)
        };
        let (lo, hi) = range(&|_| true);
        let (lo1, hi1) = range(&|t| t <= mid);
        let (lo2, hi2) = range(&|t| t >= mid);
        amplitude[i] = hi - lo;
        amp_first[i] = hi1 - lo1;
        amp_second[i] = hi2 - lo2;
        if lo > threshold {
            persistent.push(i);
        }
    }

    let max_amp = persistent.iter().map(|&i| amplitude[i]).fold(0.0, f64::max);
    let limit_kind = if persistent.iter().all(|&i| amplitude[i] < AMPLITUDE_TOL) {
        LimitKind::FixedPoint
    } else {
        let steady = persistent
            .iter()
            .filter(|&&i| amplitude[i] >= AMPLITUDE_TOL)
            .all(|&i| {
                let (a, b) = (amp_first[i], amp_second[i]);
                a > 0.5 * AMPLITUDE_TOL && b > 0.5 * AMPLITUDE_TOL && (0.5..=2.0).contains(&(b / a))
            });
        if steady {
            LimitKind::Cycle
        } else {
            LimitKind::Undetermined
        }
    };

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("threshold".to_string(), threshold);
    diagnostics.insert("window".to_string(), window);
    diagnostics.insert("max_amplitude".to_string(), max_amp);
    diagnostics.insert("samples_in_window".to_string(), idx.len() as f64);
    for &i in &persistent {
        diagnostics.insert(format!("amplitude_{}", i + 1), amplitude[i]);
    }

    Ok(OutcomeReport {
        persistent_set: persistent,
        limit_kind,
        final_frequencies: traj.final_state().to_vec(),
        diagnostics,
    })
}
