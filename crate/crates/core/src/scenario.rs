//! Scenario files: TOML documents describing parameters, deviations,
//! initial data, horizons and analysis settings.
//!
//! ```toml
//! schema_version = 1
//! name = "two-strain"
//! epsilon = 0.05
//!
//! [neutral]
//! beta = 4.0        # or r0 = 2.0
//! gamma = 1.0
//! r = 1.0
//! k = 1.5           # or mu = 0.667
//!
//! [perturbations]
//! n = 2
//! mask = [1, 2]
//! b = [0.3, -0.1]
//! nu = [0.0, 0.2]
//!
//! [initial]
//! frequencies = [0.5, 0.5]
//! ```
//!
//! Missing deviation arrays default to zero. A `[perturbations.random]`
//! table fills selected arrays from a seeded uniform distribution, and
//! `[[variants]]` entries override neutral parameters by name.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full::{slow_manifold_state, FullState};
use crate::matrix::SquareMatrix;
use crate::model::{neutral_equilibrium, realize_traits, NeutralParameters, TraitMask, TraitPerturbations};
use crate::ode::SolverConfig;
use crate::outcome::{DEFAULT_THRESHOLD, DEFAULT_WINDOW_FRACTION};
use crate::slow::SimplexState;

pub const SCHEMA_VERSION: u32 = 1;

/// Scenarios shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("fig-exclusion-a", include_str!("../scenarios/fig-exclusion-a.toml")),
    ("fig-exclusion-b", include_str!("../scenarios/fig-exclusion-b.toml")),
    ("fig-a3", include_str!("../scenarios/fig-a3.toml")),
    ("fig-a4", include_str!("../scenarios/fig-a4.toml")),
    ("fig-a5", include_str!("../scenarios/fig-a5.toml")),
    ("fig-a6", include_str!("../scenarios/fig-a6.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// Start on the slow manifold at these frequencies.
    Frequencies(Vec<f64>),
    State(FullState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizons {
    pub t_end: f64,
    pub tau_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub threshold: f64,
    pub window_fraction: f64,
    /// Number of output intervals for trajectories.
    pub samples: usize,
    pub scaling_epsilons: Vec<f64>,
    pub scaling_tau_end: f64,
    pub scaling_samples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            samples: 1000,
            scaling_epsilons: vec![0.1, 0.05, 0.025, 0.0125],
            scaling_tau_end: 50.0,
            scaling_samples: 200,
        }
    }
}

/// Neutral-parameter overrides applied by a named variant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeutralSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl NeutralSpec {
    fn overlay(&self, over: &NeutralSpec) -> NeutralSpec {
        // Either member of an alternative pair replaces both.
        let (beta, r0) = if over.beta.is_some() || over.r0.is_some() {
            (over.beta, over.r0)
        } else {
            (self.beta, self.r0)
        };
        let (k, mu) = if over.k.is_some() || over.mu.is_some() {
            (over.k, over.mu)
        } else {
            (self.k, self.mu)
        };
        NeutralSpec {
            beta,
            r0,
            gamma: over.gamma.or(self.gamma),
            r: over.r.or(self.r),
            k,
            mu,
        }
    }

    pub fn resolve(&self, field: &str) -> Result<NeutralParameters> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::scenario(format!("{field}.{name}"), "is required"))
        };
        let gamma = need(self.gamma, "gamma")?;
        let r = need(self.r, "r")?;
        let m = r + gamma;
        let beta = match (self.beta, self.r0) {
            (Some(b), None) => b,
            (None, Some(r0)) => r0 * m,
            _ => return Err(Error::scenario(field, "give exactly one of `beta` and `r0`")),
        };
        let k = match (self.k, self.mu) {
            (Some(k), None) => k,
            (None, Some(mu)) => {
                let r0 = beta / m;
                if !(mu > 0.0 && r0 > 1.0) {
                    return Err(Error::scenario(
                        format!("{field}.mu"),
                        "needs mu > 0 and R0 > 1 to determine k",
                    ));
                }
                1.0 / (mu * (r0 - 1.0))
            }
            _ => return Err(Error::scenario(field, "give exactly one of `k` and `mu`")),
        };
        NeutralParameters::new(beta, gamma, r, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(flatten)]
    pub neutral: NeutralSpec,
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub description: String,
    pub provenance: String,
    pub neutral_spec: NeutralSpec,
    pub neutral: NeutralParameters,
    pub perturbations: TraitPerturbations,
    pub epsilon: f64,
    pub initial: InitialCondition,
    pub horizons: Horizons,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub variants: Vec<Variant>,
    pub active_variant: Option<String>,
    /// Generator for randomly drawn deviations, when used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.perturbations.n
    }

    /// Full-system initial state, expanding frequencies onto the slow
    /// manifold.
    pub fn initial_state(&self) -> Result<FullState> {
        match &self.initial {
            InitialCondition::State(s) => Ok(s.clone()),
            InitialCondition::Frequencies(z) => {
                let eq = neutral_equilibrium(&self.neutral, self.perturbations.mask)?;
                Ok(slow_manifold_state(&eq, z))
            }
        }
    }

    /// Initial strain frequencies, taken from the infected classes when an
    /// explicit state is given.
    pub fn initial_frequencies(&self) -> Result<SimplexState> {
        match &self.initial {
            InitialCondition::Frequencies(z) => SimplexState::normalized(z),
            InitialCondition::State(s) => {
                let n = s.n();
                let mut w = s.i_single.clone();
                for i in 0..n {
                    for j in 0..n {
                        w[i] += 0.5 * s.i_double[(i, j)];
                        w[j] += 0.5 * s.i_double[(i, j)];
                    }
                }
                SimplexState::normalized(&w)
            }
        }
    }

    /// Copy with a named variant's neutral overrides applied.
    pub fn with_variant(&self, name: &str) -> Result<Scenario> {
        let variant = self.variants.iter().find(|v| v.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
            Error::scenario("variant", format!("unknown variant `{name}`, known: {known:?}"))
        })?;
        let spec = self.neutral_spec.overlay(&variant.neutral);
        let mut out = self.clone();
        out.neutral = spec.resolve(&format!("variants.{name}"))?;
        out.neutral_spec = spec;
        out.active_variant = Some(name.to_string());
        out.check()?;
        Ok(out)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Scenario> {
        let mut out = self.clone();
        out.epsilon = epsilon;
        out.check()?;
        Ok(out)
    }

    /// Copy with the random deviations redrawn from another seed.
    pub fn with_seed(&self, seed: u64) -> Result<Scenario> {
        let Some(spec) = &self.random else {
            return Err(Error::scenario("perturbations.random", "scenario has no random deviations to reseed"));
        };
        let mut out = self.clone();
        let spec = RandomSpec { seed, ..spec.clone() };
        draw_random(&spec, &mut out.perturbations)?;
        out.perturbations.validate()?;
        out.random = Some(spec);
        out.check()?;
        Ok(out)
    }

    fn check(&self) -> Result<()> {
        neutral_equilibrium(&self.neutral, self.perturbations.mask)?;
        realize_traits(&self.neutral, &self.perturbations, self.epsilon)?;
        if let InitialCondition::State(s) = &self.initial {
            if s.n() != self.n() {
                return Err(Error::scenario("initial.state", "strain count differs from perturbations.n"));
            }
            s.validate(1e-9)?;
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default = "default_provenance")]
    provenance: String,
    epsilon: f64,
    neutral: NeutralSpec,
    perturbations: RawPerturbations,
    #[serde(default)]
    initial: RawInitial,
    horizons: Horizons,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    analysis: AnalysisConfig,
    #[serde(default)]
    variants: Vec<Variant>,
}

fn default_provenance() -> String {
    "user".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbations {
    n: usize,
    #[serde(default)]
    mask: Vec<u8>,
    b: Option<Vec<f64>>,
    nu: Option<Vec<f64>>,
    u: Option<Vec<Vec<f64>>>,
    omega: Option<Vec<Vec<f64>>>,
    alpha: Option<Vec<Vec<f64>>>,
    random: Option<RandomSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    pub low: f64,
    pub high: f64,
    pub fields: Vec<String>,
}

fn default_distribution() -> String {
    "uniform".to_string()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    frequencies: Option<Vec<f64>>,
    #[serde(default)]
    uniform: bool,
    state: Option<RawState>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    s: f64,
    i_single: Vec<f64>,
    i_double: Vec<Vec<f64>>,
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    build(raw)
}

/// Reads a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

/// A bundled scenario by name.
pub fn bundled_scenario(name: &str) -> Result<Scenario> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::scenario("name", format!("no bundled scenario `{name}`")))?;
    parse_scenario(text)
}

/// Bundled name if it matches one, otherwise a file path.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    if BUNDLED.iter().any(|(n, _)| *n == arg) {
        bundled_scenario(arg)
    } else {
        load_scenario(arg)
    }
}

fn build(raw: RawScenario) -> Result<Scenario> {
    if raw.schema_version != SCHEMA_VERSION {
        return Err(Error::scenario(
            "schema_version",
            format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
        ));
    }
    let neutral = raw.neutral.resolve("neutral")?;
    let random = raw.perturbations.random.clone();
    let perturbations = build_perturbations(raw.perturbations)?;
    let n = perturbations.n;

    let initial = match (raw.initial.frequencies, raw.initial.uniform, raw.initial.state) {
        (Some(z), false, None) => {
            if z.len() != n {
                return Err(Error::scenario(
                    "initial.frequencies",
                    format!("has length {}, expected n = {n}", z.len()),
                ));
            }
            InitialCondition::Frequencies(SimplexState::normalized(&z)?.z)
        }
        (None, _, None) => InitialCondition::Frequencies(SimplexState::uniform(n).z),
        (None, false, Some(s)) => {
            if s.i_single.len() != n {
                return Err(Error::scenario("initial.state.i_single", format!("expected length n = {n}")));
            }
            InitialCondition::State(FullState {
                s: s.s,
                i_single: s.i_single,
                i_double: SquareMatrix::from_rows(s.i_double)?,
            })
        }
        _ => {
            return Err(Error::scenario(
                "initial",
                "give only one of `frequencies`, `uniform` and `state`",
            ))
        }
    };

    let positive = |field: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::scenario(field, format!("must be finite and > 0, got {v}")))
        }
    };
    positive("horizons.t_end", raw.horizons.t_end)?;
    positive("horizons.tau_end", raw.horizons.tau_end)?;
    raw.solver.validate()?;
    let a = &raw.analysis;
    positive("analysis.threshold", a.threshold)?;
    if !(a.window_fraction > 0.0 && a.window_fraction <= 1.0) {
        return Err(Error::scenario("analysis.window_fraction", "must lie in (0, 1]"));
    }
    if a.samples == 0 || a.scaling_samples == 0 {
        return Err(Error::scenario("analysis.samples", "must be >= 1"));
    }
    positive("analysis.scaling_tau_end", a.scaling_tau_end)?;
    for e in &a.scaling_epsilons {
        positive("analysis.scaling_epsilons", *e)?;
    }
    let mut names = std::collections::BTreeSet::new();
    for v in &raw.variants {
        if !names.insert(v.name.clone()) {
            return Err(Error::scenario("variants", format!("duplicate variant name `{}`", v.name)));
        }
    }

    let scenario = Scenario {
        schema_version: raw.schema_version,
        name: raw.name,
        description: raw.description,
        provenance: raw.provenance,
        neutral_spec: raw.neutral,
        neutral,
        perturbations,
        epsilon: raw.epsilon,
        initial,
        horizons: raw.horizons,
        solver: raw.solver,
        analysis: raw.analysis,
        variants: raw.variants,
        active_variant: None,
        random,
    };
    scenario.check()?;
    for v in &scenario.variants {
        scenario.with_variant(&v.name)?;
    }
    Ok(scenario)
}

fn build_perturbations(raw: RawPerturbations) -> Result<TraitPerturbations> {
    let n = raw.n;
    if n == 0 {
        return Err(Error::scenario("perturbations.n", "must be >= 1"));
    }
    let mask = TraitMask::from_indices(&raw.mask)?;
    let b = vector("perturbations.b", raw.b, n)?;
    let nu = vector("perturbations.nu", raw.nu, n)?;
    let u = matrix("perturbations.u", raw.u, n)?;
    let omega = matrix("perturbations.omega", raw.omega, n)?;
    let alpha = matrix("perturbations.alpha", raw.alpha, n)?;

    let mut pert = TraitPerturbations {
        n,
        b,
        nu,
        u,
        omega,
        alpha,
        mask,
    };
    if let Some(spec) = &raw.random {
        draw_random(spec, &mut pert)?;
    }
    pert.validate()?;
    Ok(pert)
}

const RANDOM_FIELDS: [&str; 5] = ["b", "nu", "u", "omega", "alpha"];

fn draw_random(spec: &RandomSpec, pert: &mut TraitPerturbations) -> Result<()> {
    if spec.distribution != "uniform" {
        return Err(Error::scenario(
            "perturbations.random.distribution",
            format!("unsupported distribution `{}`, only `uniform`", spec.distribution),
        ));
    }
    if !(spec.low.is_finite() && spec.high.is_finite() && spec.low < spec.high) {
        return Err(Error::scenario("perturbations.random", "needs finite low < high"));
    }
    if let Some(bad) = spec.fields.iter().find(|f| !RANDOM_FIELDS.contains(&f.as_str())) {
        return Err(Error::scenario("perturbations.random.fields", format!("unknown field `{bad}`")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Canonical order keeps draws independent of how fields are listed.
    for field in RANDOM_FIELDS {
        if !spec.fields.iter().any(|f| f == field) {
            continue;
        }
        let target: &mut [f64] = match field {
            "b" => &mut pert.b,
            "nu" => &mut pert.nu,
            "u" => pert.u.as_mut_slice(),
            "omega" => pert.omega.as_mut_slice(),
            _ => pert.alpha.as_mut_slice(),
        };
        for x in target.iter_mut() {
            *x = rng.random_range(spec.low..spec.high);
        }
    }
    Ok(())
}

fn vector(field: &str, v: Option<Vec<f64>>, n: usize) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![0.0; n]),
        Some(v) if v.len() == n => Ok(v),
        Some(v) => Err(Error::scenario(field, format!("has length {}, expected n = {n}", v.len()))),
    }
}

fn matrix(field: &str, m: Option<Vec<Vec<f64>>>, n: usize) -> Result<SquareMatrix> {
    match m {
        None => Ok(SquareMatrix::zeros(n)),
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::scenario(field, format!("must be an {n}x{n} nested array")));
            }
            SquareMatrix::from_rows(rows)
        }
    }
}
