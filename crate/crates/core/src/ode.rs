//! Adaptive Dormand–Prince 5(4) integrator with dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Autonomous or non-autonomous first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// Tolerances and limits for one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `None` means the whole interval.
    pub h_max: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_steps: 5_000_000,
            h_max: None,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol.is_finite() && self.rtol > 0.0) {
            return Err(Error::invalid("solver.rtol", "must be finite and > 0"));
        }
        if !(self.atol.is_finite() && self.atol > 0.0) {
            return Err(Error::invalid("solver.atol", "must be finite and > 0"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("solver.max_steps", "must be >= 1"));
        }
        if let Some(h) = self.h_max {
            if !(h.is_finite() && h > 0.0) {
                return Err(Error::invalid("solver.h_max", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// State constraint enforced after every accepted step and on every
/// dense-output sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    /// Components in `[-10 atol, 0)` are clamped to zero, anything more
    /// negative aborts.
    NonNegative,
    /// Non-negativity plus renormalization to unit sum; aborts when the
    /// sum has drifted by more than `SIMPLEX_DRIFT_LIMIT`.
    Simplex,
}

pub const SIMPLEX_DRIFT_LIMIT: f64 = 1e-6;

/// Counters collected during an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest `|sum(y) - 1|` seen before renormalization (simplex only).
    pub max_simplex_drift: f64,
    /// Largest magnitude clamped to zero.
    pub max_clamped: f64,
}

/// States at the requested sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegrationStats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Integrates `sys` from `(t0, y0)` and returns the state at every entry of
/// `sample_times`, which must be non-decreasing and lie in `[t0, ∞)`.
/// Integration stops at the last sample time.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    cfg: &SolverConfig,
    constraint: Constraint,
) -> Result<Solution> {
    cfg.validate()?;
    let n = sys.dim();
    if y0.len() != n {
        return Err(Error::Dimension(format!(
            "initial state has length {}, system dimension is {n}",
            y0.len()
        )));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    for w in sample_times.windows(2) {
        if w[1] < w[0] {
            return Err(Error::invalid("sample_times", "must be non-decreasing"));
        }
    }
    if let Some(&first) = sample_times.first() {
        if first < t0 {
            return Err(Error::invalid("sample_times", "must not precede the initial time"));
        }
    }

    let mut stats = IntegrationStats::default();
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut next = 0;

    let mut y = y0.to_vec();
    apply_constraint(constraint, t0, &mut y, cfg.atol, &mut stats)?;

    while next < sample_times.len() && sample_times[next] <= t0 {
        times.push(sample_times[next]);
        states.push(y.clone());
        next += 1;
    }
    let Some(&t_end) = sample_times.last() else {
        return Ok(Solution { times, states, stats });
    };
    if next == sample_times.len() {
        return Ok(Solution { times, states, stats });
    }

    let span = t_end - t0;
    let h_max = cfg.h_max.unwrap_or(span).min(span);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut rcont = vec![vec![0.0; n]; 5];

    let mut t = t0;
    sys.rhs(t, &y, &mut k1);
    stats.rhs_evals += 1;
    check_finite(t, &k1)?;
    let mut h = initial_step(sys, t, &y, &k1, cfg, h_max, &mut stats);
    let mut last_rejected = false;

    while next < sample_times.len() {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::StepBudget {
                t,
                max_steps: cfg.max_steps,
            });
        }
        let h_floor = 1e-12 * t.abs().max(1.0);
        if h < h_floor {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut last = false;
        if t + h >= t_end {
            h = t_end - t;
            last = true;
        }

        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, &ytmp, &mut k2);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, &ytmp, &mut k3);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, &ytmp, &mut k4);
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, &ytmp, &mut k5);
        for i in 0..n {
            ytmp[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, &ytmp, &mut k6);
        for i in 0..n {
            y1[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if last { t_end } else { t + h };
        sys.rhs(t_new, &y1, &mut k7);
        stats.rhs_evals += 6;

        let mut err_sq = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(y1[i].abs());
            let q = e / sc;
            err_sq += q * q;
            finite &= y1[i].is_finite() && k7[i].is_finite();
        }
        let err = if finite {
            (err_sq / n.max(1) as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            stats.accepted += 1;
            for i in 0..n {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k7[i] - bspl;
                rcont[4][i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }

            while next < sample_times.len() && sample_times[next] <= t_new {
                let ts = sample_times[next];
                let mut ys = if ts == t_new {
                    y1.clone()
                } else {
                    dense_eval(&rcont, (ts - t) / h)
                };
                apply_constraint(constraint, ts, &mut ys, cfg.atol, &mut stats)?;
                times.push(ts);
                states.push(ys);
                next += 1;
            }

            std::mem::swap(&mut y, &mut y1);
            t = t_new;
            if apply_constraint(constraint, t, &mut y, cfg.atol, &mut stats)? {
                sys.rhs(t, &y, &mut k1);
                stats.rhs_evals += 1;
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            check_finite(t, &k1)?;

            let mut fac = if err == 0.0 {
                FAC_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
            };
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            let fac = if err.is_finite() {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            h *= fac;
            last_rejected = true;
        }
    }

    Ok(Solution { times, states, stats })
}

fn dense_eval(rcont: &[Vec<f64>], theta: f64) -> Vec<f64> {
    let theta1 = 1.0 - theta;
    (0..rcont[0].len())
        .map(|i| {
            rcont[0][i]
                + theta
                    * (rcont[1][i]
                        + theta1 * (rcont[2][i] + theta * (rcont[3][i] + theta1 * rcont[4][i])))
        })
        .collect()
}

fn check_finite(t: f64, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Returns true when `y` was modified.
fn apply_constraint(
    constraint: Constraint,
    t: f64,
    y: &mut [f64],
    atol: f64,
    stats: &mut IntegrationStats,
) -> Result<bool> {
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite { t });
    }
    let mut changed = false;
    if matches!(constraint, Constraint::NonNegative | Constraint::Simplex) {
        let floor = -10.0 * atol;
        for (index, v) in y.iter_mut().enumerate() {
            if *v < 0.0 {
                if *v < floor {
                    return Err(Error::NegativeExcursion { t, index, value: *v });
                }
                stats.max_clamped = stats.max_clamped.max(-*v);
                *v = 0.0;
                changed = true;
            }
        }
    }
    if constraint == Constraint::Simplex {
        let sum: f64 = y.iter().sum();
        let drift = (sum - 1.0).abs();
        stats.max_simplex_drift = stats.max_simplex_drift.max(drift);
        if drift > SIMPLEX_DRIFT_LIMIT {
            return Err(Error::SimplexDrift { t, drift });
        }
        if sum != 1.0 {
            for v in y.iter_mut() {
                *v /= sum;
            }
            changed = true;
        }
    }
    Ok(changed)
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    cfg: &SolverConfig,
    h_max: f64,
    stats: &mut IntegrationStats,
) -> f64 {
    let n = y.len();
    let scale = |i: usize| cfg.atol + cfg.rtol * y[i].abs();
    let rms = |v: &dyn Fn(usize) -> f64| {
        ((0..n).map(|i| v(i).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt()
    };
    let d0 = rms(&|i| y[i] / scale(i));
    let d1 = rms(&|i| f0[i] / scale(i));
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(h_max);
    let y1: Vec<f64> = (0..n).map(|i| y[i] + h0 * f0[i]).collect();
    let mut f1 = vec![0.0; n];
    sys.rhs(t + h0, &y1, &mut f1);
    stats.rhs_evals += 1;
    let d2 = rms(&|i| (f1[i] - f0[i]) / scale(i)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(h_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Decay(f64);

    impl OdeSystem for Decay {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = -self.0 * y[0];
        }
    }

    struct Oscillator;

    impl OdeSystem for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    struct TimeDependent;

    impl OdeSystem for TimeDependent {
        fn dim(&self) -> usize {
            1
        }
        fn rhs(&self, t: f64, _y: &[f64], dy: &mut [f64]) {
            dy[0] = (3.0 * t).cos();
        }
    }

    #[test]
    fn exponential_decay_matches_closed_form() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.2).collect();
        let sol = integrate(&Decay(0.7), 0.0, &[2.0], &grid, &SolverConfig::default(), Constraint::None).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            let exact = 2.0 * (-0.7 * t).exp();
            assert!((y[0] - exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn dense_output_tracks_oscillator() {
        // Coarse steps force many samples to come from interpolation.
        let grid: Vec<f64> = (0..=997).map(|i| i as f64 * 0.0317).collect();
        let cfg = SolverConfig::with_tolerances(1e-9, 1e-12);
        let sol = integrate(&Oscillator, 0.0, &[1.0, 0.0], &grid, &cfg, Constraint::None).unwrap();
        assert!(sol.stats.accepted < grid.len());
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - t.cos()).abs() < 1e-7, "t={t}");
            assert!((y[1] + t.sin()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn explicit_time_dependence() {
        let grid = [0.5, 1.0, 2.5];
        let sol = integrate(&TimeDependent, 0.0, &[0.0], &grid, &SolverConfig::default(), Constraint::None).unwrap();
        for (t, y) in sol.times.iter().zip(&sol.states) {
            assert!((y[0] - (3.0 * t).sin() / 3.0).abs() < 1e-8);
        }
    }

    #[test]
    fn samples_at_initial_time_return_initial_state() {
        let sol = integrate(&Decay(1.0), 1.0, &[3.0], &[1.0, 1.0, 2.0], &SolverConfig::default(), Constraint::None).unwrap();
        assert_eq!(sol.states[0], vec![3.0]);
        assert_eq!(sol.states[1], vec![3.0]);
        assert_eq!(sol.times.len(), 3);
    }

    #[test]
    fn step_budget_reported() {
        let cfg = SolverConfig {
            max_steps: 3,
            ..SolverConfig::default()
        };
        let err = integrate(&Oscillator, 0.0, &[1.0, 0.0], &[100.0], &cfg, Constraint::None).unwrap_err();
        assert!(matches!(err, Error::StepBudget { .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn large_negative_excursion_aborts() {
        struct Drain;
        impl OdeSystem for Drain {
            fn dim(&self) -> usize {
                1
            }
            fn rhs(&self, _t: f64, _y: &[f64], dy: &mut [f64]) {
                dy[0] = -1.0;
            }
        }
        let err = integrate(&Drain, 0.0, &[0.5], &[2.0], &SolverConfig::default(), Constraint::NonNegative).unwrap_err();
        assert!(matches!(err, Error::NegativeExcursion { index: 0, .. }));
    }

    #[test]
    fn simplex_drift_aborts() {
        struct Grow;
        impl OdeSystem for Grow {
            fn dim(&self) -> usize {
                2
            }
            fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
                dy[0] = y[0];
                dy[1] = y[1];
            }
        }
        let err = integrate(&Grow, 0.0, &[0.5, 0.5], &[1.0], &SolverConfig::default(), Constraint::Simplex).unwrap_err();
        assert!(matches!(err, Error::SimplexDrift { .. }));
    }

    #[test]
    fn unsorted_samples_rejected() {
        let err = integrate(&Decay(1.0), 0.0, &[1.0], &[1.0, 0.5], &SolverConfig::default(), Constraint::None).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }
}
