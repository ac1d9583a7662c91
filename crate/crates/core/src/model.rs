//! Parameter algebra: neutral backbone, trait deviations, realized
//! strain-specific rates and the neutral equilibrium with its timescale
//! weights.
//!
//! Every strain trait is written as a reference value plus an
//! `epsilon`-scaled deviation:
//!
//! | trait | realized value |
//! |-------|----------------|
//! | transmission | `beta_i = beta (1 + eps b_i)` |
//! | single clearance | `gamma_i = gamma (1 + eps nu_i)` |
//! | co-colonization clearance | `gamma_ij = gamma (1 + eps u_ij)` |
//! | transmission from mixed carriage | `p_ij^i = 1/2 + eps omega_ij^i` |
//! | co-colonization vulnerability | `k_ij = k + eps alpha_ij` |
//!
//! A [`TraitMask`] selects which of the five deviations act; masked-off
//! traits realize at their neutral value.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

/// The five trait dimensions along which strains may differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trait {
    Transmission = 1,
    Clearance = 2,
    CoClearance = 3,
    MixedTransmission = 4,
    CoVulnerability = 5,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Transmission,
        Trait::Clearance,
        Trait::CoClearance,
        Trait::MixedTransmission,
        Trait::CoVulnerability,
    ];

    pub fn from_index(d: u8) -> Result<Self> {
        match d {
            1 => Ok(Trait::Transmission),
            2 => Ok(Trait::Clearance),
            3 => Ok(Trait::CoClearance),
            4 => Ok(Trait::MixedTransmission),
            5 => Ok(Trait::CoVulnerability),
            other => Err(Error::TraitOutOfRange(other)),
        }
    }

    /// 1-based trait number.
    pub fn index(self) -> u8 {
        self as u8
    }

    fn bit(self) -> u8 {
        1 << (self as u8 - 1)
    }
}

/// Subset of active trait dimensions.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TraitMask(u8);

impl TraitMask {
    pub const EMPTY: TraitMask = TraitMask(0);
    pub const ALL: TraitMask = TraitMask(0b1_1111);

    pub fn from_indices(indices: &[u8]) -> Result<Self> {
        let mut bits = 0;
        for &d in indices {
            bits |= Trait::from_index(d)?.bit();
        }
        Ok(TraitMask(bits))
    }

    pub fn from_traits(traits: &[Trait]) -> Self {
        TraitMask(traits.iter().fold(0, |acc, t| acc | t.bit()))
    }

    pub fn contains(self, t: Trait) -> bool {
        self.0 & t.bit() != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: TraitMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn traits(self) -> impl Iterator<Item = Trait> {
        Trait::ALL.into_iter().filter(move |t| self.contains(*t))
    }

    pub fn indices(self) -> Vec<u8> {
        self.traits().map(Trait::index).collect()
    }

    /// 1.0 when the trait is active, 0.0 otherwise.
    pub fn indicator(self, t: Trait) -> f64 {
        if self.contains(t) {
            1.0
        } else {
            0.0
        }
    }

    /// Enumerates all 32 subsets.
    pub fn all_subsets() -> impl Iterator<Item = TraitMask> {
        (0u8..32).map(TraitMask)
    }
}

impl fmt::Display for TraitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices().iter().map(|d| d.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl fmt::Debug for TraitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TraitMask{self}")
    }
}

impl Serialize for TraitMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TraitMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let indices = Vec::<u8>::deserialize(deserializer)?;
        TraitMask::from_indices(&indices).map_err(serde::de::Error::custom)
    }
}

/// Strain-independent reference parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralParameters {
    /// Transmission rate.
    pub beta: f64,
    /// Clearance rate of single colonization.
    pub gamma: f64,
    /// Host turnover (recruitment = mortality).
    pub r: f64,
    /// Reference co-colonization vulnerability factor.
    pub k: f64,
}

impl NeutralParameters {
    pub fn new(beta: f64, gamma: f64, r: f64, k: f64) -> Result<Self> {
        let p = Self { beta, gamma, r, k };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("beta", self.beta)?;
        positive("gamma", self.gamma)?;
        positive("k", self.k)?;
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::invalid("r", format!("must be finite and >= 0, got {}", self.r)));
        }
        Ok(())
    }

    /// Inverse mean duration of carriage, `r + gamma`.
    pub fn m(&self) -> f64 {
        self.r + self.gamma
    }

    pub fn r0(&self) -> f64 {
        self.beta / self.m()
    }
}

/// Deviations from neutrality for each strain, plus the active-trait mask.
///
/// `omega[(i, j)]` stores the deviation of the transmission probability of
/// the first-acquired strain `i` from an (i then j) host. The deviation of
/// the second strain from the same host is its negative, so realized
/// probabilities always sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitPerturbations {
    pub n: usize,
    pub b: Vec<f64>,
    pub nu: Vec<f64>,
    pub u: SquareMatrix,
    pub omega: SquareMatrix,
    pub alpha: SquareMatrix,
    pub mask: TraitMask,
}

impl TraitPerturbations {
    /// All deviations zero.
    pub fn neutral(n: usize, mask: TraitMask) -> Self {
        Self {
            n,
            b: vec![0.0; n],
            nu: vec![0.0; n],
            u: SquareMatrix::zeros(n),
            omega: SquareMatrix::zeros(n),
            alpha: SquareMatrix::zeros(n),
            mask,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "strain count must be at least 1"));
        }
        let vec_len = |name: &str, v: &[f64]| {
            if v.len() == self.n {
                Ok(())
            } else {
                Err(Error::Dimension(format!(
                    "`{name}` has length {}, expected n = {}",
                    v.len(),
                    self.n
                )))
            }
        };
        vec_len("b", &self.b)?;
        vec_len("nu", &self.nu)?;
        for (name, m) in [("u", &self.u), ("omega", &self.omega), ("alpha", &self.alpha)] {
            if m.n() != self.n {
                return Err(Error::Dimension(format!(
                    "`{name}` is {}x{}, expected n = {}",
                    m.n(),
                    m.n(),
                    self.n
                )));
            }
        }
        let all_finite = self.b.iter().chain(&self.nu).all(|x| x.is_finite())
            && [&self.u, &self.omega, &self.alpha]
                .iter()
                .all(|m| m.as_slice().iter().all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::invalid("perturbations", "deviations must be finite"));
        }
        Ok(())
    }

    /// Multiplies every deviation array by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            b: self.b.iter().map(|x| x * factor).collect(),
            nu: self.nu.iter().map(|x| x * factor).collect(),
            u: self.u.map(|x| x * factor),
            omega: self.omega.map(|x| x * factor),
            alpha: self.alpha.map(|x| x * factor),
            mask: self.mask,
        }
    }

    /// Relabels strains: new strain `i` is old strain `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n,
            b: perm.iter().map(|&p| self.b[p]).collect(),
            nu: perm.iter().map(|&p| self.nu[p]).collect(),
            u: self.u.permuted(perm),
            omega: self.omega.permuted(perm),
            alpha: self.alpha.permuted(perm),
            mask: self.mask,
        }
    }

    pub fn with_mask(&self, mask: TraitMask) -> Self {
        Self {
            mask,
            ..self.clone()
        }
    }
}

/// Realized strain-specific rates for a given `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrainParameters {
    pub beta_i: Vec<f64>,
    pub gamma_i: Vec<f64>,
    pub gamma_ij: SquareMatrix,
    /// Transmission probability of the first-acquired strain from an
    /// (i then j) co-colonized host.
    pub p_ij_i: SquareMatrix,
    pub k_ij: SquareMatrix,
    pub epsilon: f64,
}

impl StrainParameters {
    pub fn n(&self) -> usize {
        self.beta_i.len()
    }

    /// Transmission probability of the second-acquired strain `j` from an
    /// (i then j) host.
    pub fn p_ij_j(&self, i: usize, j: usize) -> f64 {
        1.0 - self.p_ij_i[(i, j)]
    }
}

/// Applies the deviations at magnitude `epsilon`; masked-off traits stay
/// neutral. Rejects any non-positive rate or probability outside [0, 1].
pub fn realize_traits(
    params: &NeutralParameters,
    pert: &TraitPerturbations,
    epsilon: f64,
) -> Result<StrainParameters> {
    params.validate()?;
    pert.validate()?;
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::invalid("epsilon", format!("must be finite and >= 0, got {epsilon}")));
    }
    let n = pert.n;
    let mask = pert.mask;
    let e = |t: Trait| epsilon * mask.indicator(t);
    let (e1, e2, e3, e4, e5) = (
        e(Trait::Transmission),
        e(Trait::Clearance),
        e(Trait::CoClearance),
        e(Trait::MixedTransmission),
        e(Trait::CoVulnerability),
    );

    let sp = StrainParameters {
        beta_i: pert.b.iter().map(|b| params.beta * (1.0 + e1 * b)).collect(),
        gamma_i: pert.nu.iter().map(|nu| params.gamma * (1.0 + e2 * nu)).collect(),
        gamma_ij: SquareMatrix::from_fn(n, |i, j| params.gamma * (1.0 + e3 * pert.u[(i, j)])),
        p_ij_i: SquareMatrix::from_fn(n, |i, j| 0.5 + e4 * pert.omega[(i, j)]),
        k_ij: SquareMatrix::from_fn(n, |i, j| params.k + e5 * pert.alpha[(i, j)]),
        epsilon,
    };

    for (i, &v) in sp.beta_i.iter().enumerate() {
        check_rate(format!("beta_{}", i + 1), v)?;
    }
    for (i, &v) in sp.gamma_i.iter().enumerate() {
        check_rate(format!("gamma_{}", i + 1), v)?;
    }
    for i in 0..n {
        for j in 0..n {
            check_rate(format!("gamma_{}{}", i + 1, j + 1), sp.gamma_ij[(i, j)])?;
            let p = sp.p_ij_i[(i, j)];
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::RealizedOutOfRange {
                    entry: format!("p_{}{}^{}", i + 1, j + 1, i + 1),
                    value: p,
                    reason: "probability must lie in [0, 1]",
                });
            }
            let k = sp.k_ij[(i, j)];
            if !(k.is_finite() && k >= 0.0) {
                return Err(Error::RealizedOutOfRange {
                    entry: format!("k_{}{}", i + 1, j + 1),
                    value: k,
                    reason: "vulnerability factor must be >= 0",
                });
            }
        }
    }
    Ok(sp)
}

fn check_rate(entry: String, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::RealizedOutOfRange {
            entry,
            value: v,
            reason: "rate must be > 0",
        })
    }
}

/// `R_{0,i} = beta_i / (r + gamma_i)`.
pub fn basic_reproduction_numbers(sp: &StrainParameters, params: &NeutralParameters) -> Vec<f64> {
    sp.beta_i
        .iter()
        .zip(&sp.gamma_i)
        .map(|(b, g)| b / (params.r + g))
        .collect()
}

/// Neutral-system equilibrium and the weights it induces on each trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralEquilibrium {
    pub params: NeutralParameters,
    pub mask: TraitMask,
    pub s_star: f64,
    pub t_star: f64,
    pub i_star: f64,
    pub d_star: f64,
    /// `I*/D*`
    pub mu: f64,
    /// Decay rate of the fast variables.
    pub xi: f64,
    /// Determinant of the `(v, z)` change of basis, `2T*² − I*D*`.
    pub det_p: f64,
    /// Per-trait speeds, already multiplied by the mask indicator.
    pub theta_raw: [f64; 5],
    /// Sum of active `theta_raw`; 1 when the mask is empty.
    pub theta_total: f64,
    /// `theta_raw / theta_total`, all zero for an empty mask.
    pub theta_norm: [f64; 5],
}

impl NeutralEquilibrium {
    pub fn theta(&self, t: Trait) -> f64 {
        self.theta_raw[t as usize - 1]
    }

    pub fn theta_weight(&self, t: Trait) -> f64 {
        self.theta_norm[t as usize - 1]
    }

    /// Double-colonization level per unit `z_i z_j` on the slow manifold,
    /// `k I* T* / S*`.
    pub fn double_scale(&self) -> f64 {
        self.params.k * self.i_star * self.t_star / self.s_star
    }
}

/// Closed-form neutral equilibrium. Requires `R0 > 1`.
pub fn neutral_equilibrium(params: &NeutralParameters, mask: TraitMask) -> Result<NeutralEquilibrium> {
    params.validate()?;
    let NeutralParameters { beta, gamma, k, .. } = *params;
    let m = params.m();
    let r0 = params.r0();
    if r0 <= 1.0 {
        return Err(Error::Subcritical { r0 });
    }
    let s_star = 1.0 / r0;
    let t_star = 1.0 - s_star;
    let i_star = m * t_star / (m + beta * k * t_star);
    let d_star = t_star - i_star;
    let mu = i_star / d_star;
    let xi = m + beta * k * t_star - beta * k * i_star / 2.0;
    let det_p = 2.0 * t_star * t_star - i_star * d_star;

    let full = [
        2.0 * beta * s_star * t_star * t_star / det_p,
        gamma * i_star * (i_star + t_star) / det_p,
        gamma * t_star * d_star / det_p,
        2.0 * m * t_star * d_star / det_p,
        beta * t_star * i_star * d_star / det_p,
    ];
    let mut theta_raw = [0.0; 5];
    for t in mask.traits() {
        let d = t as usize - 1;
        theta_raw[d] = full[d];
    }
    let active_sum: f64 = theta_raw.iter().sum();
    let (theta_total, theta_norm) = if mask.is_empty() {
        (1.0, [0.0; 5])
    } else {
        (active_sum, theta_raw.map(|x| x / active_sum))
    };

    Ok(NeutralEquilibrium {
        params: *params,
        mask,
        s_star,
        t_star,
        i_star,
        d_star,
        mu,
        xi,
        det_p,
        theta_raw,
        theta_total,
        theta_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> NeutralParameters {
        NeutralParameters::new(4.0, 1.0, 1.0, 1.5).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn equilibrium_reference_values() {
        // Exact fractions from independent rational arithmetic:
        // S* = T* = 1/2, I* = 1/5, D* = 3/10, |P| = 11/25, xi = 22/5.
        let eq = neutral_equilibrium(&reference(), TraitMask::from_indices(&[1, 2]).unwrap()).unwrap();
        assert!((eq.s_star - 0.5).abs() < 1e-15);
        assert!((eq.t_star - 0.5).abs() < 1e-15);
        assert!((eq.i_star - 0.2).abs() < 1e-15);
        assert!((eq.d_star - 0.3).abs() < 1e-15);
        assert!((eq.mu - 2.0 / 3.0).abs() < 1e-15);
        assert!((eq.det_p - 11.0 / 25.0).abs() < 1e-15);
        assert!((eq.xi - 22.0 / 5.0).abs() < 1e-14);
        assert!(rel(eq.theta_raw[0], 25.0 / 11.0) < 1e-14);
        assert!(rel(eq.theta_raw[1], 7.0 / 22.0) < 1e-14);
        assert_eq!(eq.theta_raw[2], 0.0);
        assert!(rel(eq.theta_total, 25.0 / 11.0 + 7.0 / 22.0) < 1e-14);
    }

    #[test]
    fn all_theta_values_match_rational_oracle() {
        let eq = neutral_equilibrium(&reference(), TraitMask::ALL).unwrap();
        let expected = [25.0 / 11.0, 7.0 / 22.0, 15.0 / 44.0, 15.0 / 11.0, 3.0 / 11.0];
        for (got, want) in eq.theta_raw.iter().zip(expected) {
            assert!(rel(*got, want) < 1e-14, "{got} vs {want}");
        }
        let s: f64 = eq.theta_norm.iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_mask_sets_unit_speed() {
        let eq = neutral_equilibrium(&reference(), TraitMask::EMPTY).unwrap();
        assert_eq!(eq.theta_total, 1.0);
        assert_eq!(eq.theta_norm, [0.0; 5]);
    }

    #[test]
    fn theta_ratio_identities() {
        for &(beta, gamma, r, k) in &[(4.0, 1.0, 1.0, 1.5), (3.0, 1.2, 0.3, 0.8), (10.0, 0.5, 2.0, 3.0)] {
            let p = NeutralParameters::new(beta, gamma, r, k).unwrap();
            let eq = neutral_equilibrium(&p, TraitMask::ALL).unwrap();
            let m = p.m();
            let th = eq.theta_raw;
            assert!(rel(th[3] / th[2], 2.0 * m / gamma) < 1e-12);
            assert!(rel(th[3] / th[0], 1.0 / (eq.mu + 1.0)) < 1e-12);
            // Theta_3 / Theta_1 carries a factor T* in front of the
            // (R0/2) gamma / (m/k + beta T*) expression.
            let stated = p.r0() / 2.0 * gamma / (m / k + beta * eq.t_star);
            assert!(rel(th[2] / th[0], eq.t_star * stated) < 1e-12);
        }
    }

    #[test]
    fn mu_identities() {
        let p = NeutralParameters::new(3.0, 1.2, 0.3, 5.0 / 3.0).unwrap();
        let eq = neutral_equilibrium(&p, TraitMask::EMPTY).unwrap();
        assert!(rel(eq.mu * eq.d_star, eq.i_star) < 1e-12);
        assert!(rel(eq.mu, 1.0 / (p.k * (p.r0() - 1.0))) < 1e-12);
        assert!((eq.mu - 0.6).abs() < 1e-12);
        assert!((eq.s_star + eq.t_star - 1.0).abs() < 1e-15);
        assert!((eq.i_star + eq.d_star - eq.t_star).abs() < 1e-15);
    }

    #[test]
    fn subcritical_rejected_with_r0() {
        let p = NeutralParameters::new(2.0, 1.0, 1.0, 1.0).unwrap();
        match neutral_equilibrium(&p, TraitMask::EMPTY) {
            Err(Error::Subcritical { r0 }) => assert_eq!(r0, 1.0),
            other => panic!("expected subcritical error, got {other:?}"),
        }
    }

    #[test]
    fn realize_reference_examples() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(2, TraitMask::from_indices(&[1]).unwrap());
        pert.b = vec![0.25, -0.2];
        let sp = realize_traits(&p, &pert, 0.1).unwrap();
        assert!((sp.beta_i[0] - 4.1).abs() < 1e-14);

        let mut pert = TraitPerturbations::neutral(2, TraitMask::from_indices(&[4]).unwrap());
        pert.omega[(0, 1)] = 0.3;
        let sp = realize_traits(&p, &pert, 0.1).unwrap();
        assert!((sp.p_ij_i[(0, 1)] - 0.53).abs() < 1e-15);
        assert!((sp.p_ij_j(0, 1) - 0.47).abs() < 1e-15);
        assert!((sp.p_ij_i[(0, 1)] + sp.p_ij_j(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn masked_off_traits_stay_neutral() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(2, TraitMask::from_indices(&[2]).unwrap());
        pert.b = vec![0.5, -0.5];
        pert.nu = vec![0.2, 0.1];
        let sp = realize_traits(&p, &pert, 0.1).unwrap();
        assert_eq!(sp.beta_i, vec![4.0, 4.0]);
        assert!((sp.gamma_i[0] - 1.02).abs() < 1e-15);
    }

    #[test]
    fn nonpositive_rate_named() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(3, TraitMask::from_indices(&[2]).unwrap());
        pert.nu[2] = -20.0;
        match realize_traits(&p, &pert, 0.1) {
            Err(Error::RealizedOutOfRange { entry, .. }) => assert_eq!(entry, "gamma_3"),
            other => panic!("{other:?}"),
        }
        let mut pert = TraitPerturbations::neutral(2, TraitMask::from_indices(&[4]).unwrap());
        pert.omega[(1, 0)] = 6.0;
        match realize_traits(&p, &pert, 0.1) {
            Err(Error::RealizedOutOfRange { entry, .. }) => assert_eq!(entry, "p_21^2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let mut pert = TraitPerturbations::neutral(10, TraitMask::from_indices(&[1]).unwrap());
        pert.b.pop();
        assert!(matches!(realize_traits(&reference(), &pert, 0.1), Err(Error::Dimension(_))));
    }

    #[test]
    fn r0_first_order_ordering() {
        // With beta_i = beta (1 + eps b_i) and gamma_i = gamma (1 + eps nu_i),
        // R0_i ≈ R0 (1 + eps (b_i − (gamma/m) nu_i)).
        let p = reference();
        let mask = TraitMask::from_indices(&[1, 2]).unwrap();
        let cases = [
            ([0.3, 0.1], [0.2, -0.1]),
            ([0.0, 0.4], [-1.0, 0.5]),
            ([0.25, -0.2], [1.0, 0.8]),
            ([-0.5, 0.2], [-2.0, 0.1]),
        ];
        for (b, nu) in cases {
            let mut pert = TraitPerturbations::neutral(2, mask);
            pert.b = b.to_vec();
            pert.nu = nu.to_vec();
            let sp = realize_traits(&p, &pert, 1e-6).unwrap();
            let r = basic_reproduction_numbers(&sp, &p);
            let predicted = b[0] - b[1] <= p.gamma / p.m() * (nu[0] - nu[1]);
            assert_eq!(r[0] <= r[1], predicted, "b={b:?} nu={nu:?}");
        }
    }

    #[test]
    fn neutral_limit_reproduction_numbers() {
        let p = reference();
        let mut pert = TraitPerturbations::neutral(3, TraitMask::ALL);
        pert.b = vec![0.3, -0.3, 1.0];
        pert.nu = vec![0.1, 0.2, 0.3];
        let sp = realize_traits(&p, &pert, 0.0).unwrap();
        for r in basic_reproduction_numbers(&sp, &p) {
            assert_eq!(r, p.r0());
        }
    }

    #[test]
    fn mask_serde_round_trip() {
        let m = TraitMask::from_indices(&[1, 4]).unwrap();
        assert_eq!(m.to_string(), "{1,4}");
        assert!(TraitMask::from_indices(&[6]).is_err());
        assert!(TraitMask::from_indices(&[1]).unwrap().is_subset_of(m));
    }
}
