//! Scenario-driven front end: resolves a scenario, runs one workflow and
//! writes plot-ready CSV tables and a JSON report, each carrying a
//! provenance block.

pub mod table;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coinfect_core::full::{integrate_full, neutral_scalar_observables, FullState};
use coinfect_core::matrix::SquareMatrix;
use coinfect_core::model::{neutral_equilibrium, realize_traits, NeutralEquilibrium, TraitMask};
use coinfect_core::ode::{IntegrationStats, SolverConfig};
use coinfect_core::outcome::{
    detect_persistent_set, pairwise_outcomes, predict_exclusion_winner, LimitKind, OutcomeReport,
};
use coinfect_core::scenario::{resolve_scenario, Scenario};
use coinfect_core::slow::{integrate_replicator, invasion_fitness, ReplicatorTrajectory};
use coinfect_core::validation::{compare_systems, epsilon_scaling_study, project_slow, ScalingReport};
use coinfect_core::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use table::{Cell, Table};

pub const TOOL: &str = "coinfect";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "coinfect", version, about = "Multi-strain co-colonization experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Integrate the full compartment system.
    SimulateFull(RunArgs),
    /// Integrate the slow replicator system.
    SimulateReduced(RunArgs),
    /// Run both systems on one slow-time grid and measure their distance.
    Compare(RunArgs),
    /// Pairwise outcomes, predicted winner and persistent set.
    Classify(RunArgs),
    /// Reduction error over several epsilons with a fitted order.
    Scaling(RunArgs),
    /// List bundled scenarios.
    Scenarios,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateFull(_) => "simulate-full",
            Command::SimulateReduced(_) => "simulate-reduced",
            Command::Compare(_) => "compare",
            Command::Classify(_) => "classify",
            Command::Scaling(_) => "scaling",
            Command::Scenarios => "scenarios",
        }
    }

    pub fn args(&self) -> Option<&RunArgs> {
        match self {
            Command::SimulateFull(a)
            | Command::SimulateReduced(a)
            | Command::Compare(a)
            | Command::Classify(a)
            | Command::Scaling(a) => Some(a),
            Command::Scenarios => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Bundled scenario name or path to a scenario file.
    #[arg(long)]
    pub scenario: String,
    /// Named variant of the scenario.
    #[arg(long)]
    pub variant: Option<String>,
    /// Overrides the scenario's epsilon.
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// Overrides the full-system horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub t_end: Option<f64>,
    /// Overrides the slow-time horizon.
    #[arg(long, allow_negative_numbers = true)]
    pub tau_end: Option<f64>,
    /// Output directory, created when missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    /// Output intervals per trajectory.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Redraws the scenario's random deviations from this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the scaling study (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            variant: None,
            epsilon: None,
            t_end: None,
            tau_end: None,
            out: PathBuf::from("out"),
            format: Format::Both,
            samples: None,
            seed: None,
            threads: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 3 for numerical failures, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Subcritical { .. } => "subcritical",
                Error::InvalidParameter { .. } => "invalid_parameter",
                Error::Dimension(_) => "dimension",
                Error::RealizedOutOfRange { .. } => "realized_out_of_range",
                Error::MaskMismatch { .. } => "mask_mismatch",
                Error::TraitOutOfRange(_) => "trait_out_of_range",
                Error::NonGeneric(_) => "non_generic",
                Error::StepSizeUnderflow { .. } => "step_size_underflow",
                Error::StepBudget { .. } => "step_budget",
                Error::NegativeExcursion { .. } => "negative_excursion",
                Error::SimplexDrift { .. } => "simplex_drift",
                Error::NonFinite { .. } => "non_finite",
                Error::WindowTooLong { .. } => "window_too_long",
                Error::GridCoverage(_) => "grid_coverage",
                Error::Scenario { .. } => "scenario",
                Error::Parse(_) => "parse",
                Error::Io { .. } => "io",
            },
            CliError::Usage(_) => "usage",
            CliError::Write { .. } => "write",
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        let obj = serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        });
        obj.to_string()
    }
}

/// Where an output came from; embedded in every file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub scenario: String,
    pub variant: Option<String>,
    /// SHA-256 of the resolved scenario (after overrides) serialized as JSON.
    pub scenario_sha256: String,
    pub epsilon: f64,
    pub seed: Option<u64>,
    pub samples: usize,
    pub solver: SolverConfig,
}

impl Provenance {
    fn csv_preamble(&self) -> Vec<String> {
        let s = &self.solver;
        let h_max = s.h_max.map_or("none".to_string(), |h| format!("{h:e}"));
        vec![
            format!("{} {} {}", self.tool, self.version, self.subcommand),
            format!("scenario: {} variant: {}", self.scenario, self.variant.as_deref().unwrap_or("none")),
            format!("scenario_sha256: {}", self.scenario_sha256),
            format!("epsilon: {:e} seed: {}", self.epsilon, self.seed.map_or("none".to_string(), |s| s.to_string())),
            format!("solver: rtol={:e} atol={:e} max_steps={} h_max={h_max}", s.rtol, s.atol, s.max_steps),
            "strain labels are 1-based".to_string(),
        ]
    }
}

/// Persistent-set summary with 1-based strain labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrainOutcome {
    pub persistent_set: Vec<usize>,
    /// The sole persistent strain, if there is one.
    pub winner: Option<usize>,
    pub limit_kind: LimitKind,
    pub final_frequencies: Vec<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl From<OutcomeReport> for StrainOutcome {
    fn from(r: OutcomeReport) -> Self {
        let persistent_set: Vec<usize> = r.persistent_set.iter().map(|i| i + 1).collect();
        let winner = (persistent_set.len() == 1).then(|| persistent_set[0]);
        Self {
            persistent_set,
            winner,
            limit_kind: r.limit_kind,
            final_frequencies: r.final_frequencies,
            diagnostics: r.diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullReport {
    pub n: usize,
    pub t_end: f64,
    pub equilibrium: NeutralEquilibrium,
    pub final_state: FullState,
    pub final_total_mass: f64,
    pub stats: IntegrationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedReport {
    pub n: usize,
    pub tau_end: f64,
    pub equilibrium: NeutralEquilibrium,
    /// Row `i`, column `j` holds the invasion fitness of `i` into `j`.
    pub lambda: SquareMatrix,
    pub outcome: StrainOutcome,
    pub stats: IntegrationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub epsilon: f64,
    pub t_burn: f64,
    pub tau0: f64,
    pub tau_end: f64,
    pub z0: Vec<f64>,
    pub max_error: f64,
    pub predicted_winner: Option<usize>,
    pub full_outcome: StrainOutcome,
    pub reduced_outcome: StrainOutcome,
    pub full_stats: IntegrationStats,
    pub reduced_stats: IntegrationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEntry {
    pub strain_a: usize,
    pub strain_b: usize,
    pub lambda_ab: f64,
    pub lambda_ba: f64,
    /// Absent when a fitness is zero.
    pub outcome: Option<String>,
    pub survivor: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    pub n: usize,
    pub tau_end: f64,
    pub lambda: SquareMatrix,
    pub pairwise: Vec<PairEntry>,
    /// Only for transmission/clearance masks.
    pub predicted_winner: Option<usize>,
    pub prediction_note: Option<String>,
    pub outcome: StrainOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Report {
    SimulateFull(FullReport),
    SimulateReduced(ReducedReport),
    Compare(CompareReport),
    Classify(ClassifyReport),
    Scaling(ScalingReport),
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunArtifacts {
    pub provenance: Provenance,
    pub report: Report,
    pub tables: Vec<Table>,
}

impl RunArtifacts {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes `<table>.csv` files and/or `<subcommand>.json` into `dir`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
        let wrap = |path: &Path| {
            let path = path.display().to_string();
            move |source| CliError::Write { path, source }
        };
        std::fs::create_dir_all(dir).map_err(wrap(dir))?;
        let mut written = Vec::new();
        if matches!(format, Format::Csv | Format::Both) {
            let preamble = self.provenance.csv_preamble();
            for t in &self.tables {
                let path = dir.join(format!("{}.csv", t.name));
                std::fs::write(&path, t.to_csv(&preamble)).map_err(wrap(&path))?;
                written.push(path);
            }
        }
        if matches!(format, Format::Json | Format::Both) {
            let path = dir.join(format!("{}.json", self.provenance.subcommand));
            std::fs::write(&path, self.to_json()).map_err(wrap(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    /// One human-readable line for stdout.
    pub fn summary(&self) -> String {
        let set = |o: &StrainOutcome| format!("{:?} {:?}", o.persistent_set, o.limit_kind);
        match &self.report {
            Report::SimulateFull(r) => format!("final total mass {:.12}, {} steps", r.final_total_mass, r.stats.accepted),
            Report::SimulateReduced(r) => format!("persistent set {}", set(&r.outcome)),
            Report::Compare(r) => format!(
                "max error {:.3e}; persistent set full {} reduced {}",
                r.max_error,
                set(&r.full_outcome),
                set(&r.reduced_outcome)
            ),
            Report::Classify(r) => format!("persistent set {}; predicted winner {:?}", set(&r.outcome), r.predicted_winner),
            Report::Scaling(r) => match r.fitted_slope {
                Some(s) => format!("fitted order {s:.4}"),
                None => "degenerate: errors at the noise floor".to_string(),
            },
        }
    }
}

/// Resolves the scenario and applies command-line overrides.
pub fn prepare_scenario(args: &RunArgs) -> Result<Scenario, CliError> {
    let mut sc = resolve_scenario(&args.scenario)?;
    if let Some(v) = &args.variant {
        sc = sc.with_variant(v)?;
    }
    if let Some(seed) = args.seed {
        sc = sc.with_seed(seed)?;
    }
    if let Some(e) = args.epsilon {
        sc = sc.with_epsilon(e)?;
    }
    let positive = |flag: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Usage(format!("{flag} must be finite and > 0, got {v}")))
        }
    };
    if let Some(t) = args.t_end {
        sc.horizons.t_end = positive("--t-end", t)?;
    }
    if let Some(t) = args.tau_end {
        sc.horizons.tau_end = positive("--tau-end", t)?;
        sc.analysis.scaling_tau_end = t;
    }
    if let Some(s) = args.samples {
        if s == 0 {
            return Err(CliError::Usage("--samples must be >= 1".to_string()));
        }
        sc.analysis.samples = s;
        sc.analysis.scaling_samples = s;
    }
    if args.threads == Some(0) {
        return Err(CliError::Usage("--threads must be >= 1".to_string()));
    }
    Ok(sc)
}

pub fn scenario_hash(sc: &Scenario) -> String {
    let bytes = serde_json::to_vec(sc).expect("scenario serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one workflow; `Scenarios` has no artifacts and is rejected here.
pub fn run(command: &Command) -> Result<RunArtifacts, CliError> {
    let Some(args) = command.args() else {
        return Err(CliError::Usage(format!("`{}` produces no artifacts", command.name())));
    };
    let sc = prepare_scenario(args)?;
    let samples = match command {
        Command::Scaling(_) => sc.analysis.scaling_samples,
        _ => sc.analysis.samples,
    };
    let provenance = Provenance {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        subcommand: command.name().to_string(),
        scenario: sc.name.clone(),
        variant: sc.active_variant.clone(),
        scenario_sha256: scenario_hash(&sc),
        epsilon: sc.epsilon,
        seed: sc.random.as_ref().map(|r| r.seed),
        samples,
        solver: sc.solver,
    };
    let (report, tables) = match command {
        Command::SimulateFull(_) => simulate_full(&sc)?,
        Command::SimulateReduced(_) => simulate_reduced(&sc)?,
        Command::Compare(_) => compare(&sc)?,
        Command::Classify(_) => classify(&sc)?,
        Command::Scaling(a) => scaling(&sc, a.threads)?,
        Command::Scenarios => unreachable!(),
    };
    Ok(RunArtifacts {
        provenance,
        report,
        tables,
    })
}

/// Parses nothing; runs and writes. Returns the written paths.
pub fn execute(cli: &Cli) -> Result<(RunArtifacts, Vec<PathBuf>), CliError> {
    let artifacts = run(&cli.command)?;
    let args = cli.command.args().expect("run succeeded");
    let paths = artifacts.write(&args.out, args.format)?;
    Ok((artifacts, paths))
}

fn labels(n: usize, prefix: &str) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn pair_labels(n: usize, prefix: &str) -> Vec<String> {
    (1..=n).flat_map(|i| (1..=n).map(move |j| format!("{prefix}_{i}_{j}"))).collect()
}

fn outcome_of(traj: &ReplicatorTrajectory, sc: &Scenario) -> Result<StrainOutcome, CliError> {
    let span = traj.times.last().unwrap_or(&0.0) - traj.times.first().unwrap_or(&0.0);
    let report = detect_persistent_set(traj, sc.analysis.threshold, sc.analysis.window_fraction * span)?;
    Ok(report.into())
}

fn simulate_full(sc: &Scenario) -> Result<(Report, Vec<Table>), CliError> {
    let n = sc.n();
    let eq = neutral_equilibrium(&sc.neutral, sc.perturbations.mask)?;
    let sp = realize_traits(&sc.neutral, &sc.perturbations, sc.epsilon)?;
    let state0 = sc.initial_state()?;
    let traj = integrate_full(&state0, &sp, &sc.neutral, sc.horizons.t_end, sc.analysis.samples, &sc.solver)?;

    let mut t = Table::new("full");
    t.column("t", "full time");
    t.column("tau", "slow time epsilon * t");
    t.column("S", "uncolonized hosts");
    t.column("T", "colonized hosts, single plus double");
    t.column("I", "singly colonized hosts");
    t.column("D", "doubly colonized hosts");
    t.column_group(labels(n, "z"), "z_k", "frequency of strain k from the slow projection");
    t.column_group(labels(n, "I"), "I_k", "hosts colonized by strain k only");
    t.column_group(pair_labels(n, "I"), "I_k_l", "hosts colonized by k then co-colonized by l");
    for (time, s) in traj.times.iter().zip(&traj.states) {
        let (tt, ii, dd) = neutral_scalar_observables(s);
        let z = project_slow(s, &sp, &eq).z;
        let mut row: Vec<Cell> = vec![(*time).into(), (sc.epsilon * time).into(), s.s.into(), tt.into(), ii.into(), dd.into()];
        row.extend(z.into_iter().map(Cell::from));
        row.extend(s.i_single.iter().map(|&x| Cell::from(x)));
        row.extend(s.i_double.as_slice().iter().map(|&x| Cell::from(x)));
        t.push(row);
    }
    let last = traj.states.last().expect("at least one sample").clone();
    let report = FullReport {
        n,
        t_end: sc.horizons.t_end,
        equilibrium: eq,
        final_total_mass: last.total_mass(),
        final_state: last,
        stats: traj.stats,
    };
    Ok((Report::SimulateFull(report), vec![t]))
}

fn replicator_table(name: &str, sc: &Scenario, traj: &ReplicatorTrajectory) -> Table {
    let mut t = Table::new(name);
    t.column("tau", "slow time");
    let with_t = sc.epsilon > 0.0;
    if with_t {
        t.column("t", "full time tau / epsilon");
    }
    t.column_group(labels(sc.n(), "z"), "z_k", "frequency of strain k");
    for (tau, z) in traj.times.iter().zip(&traj.states) {
        let mut row: Vec<Cell> = vec![(*tau).into()];
        if with_t {
            row.push((tau / sc.epsilon).into());
        }
        row.extend(z.iter().map(|&x| Cell::from(x)));
        t.push(row);
    }
    t
}

fn simulate_reduced(sc: &Scenario) -> Result<(Report, Vec<Table>), CliError> {
    let eq = neutral_equilibrium(&sc.neutral, sc.perturbations.mask)?;
    let lam = invasion_fitness(&sc.perturbations, &eq)?;
    let z0 = sc.initial_frequencies()?;
    let traj = integrate_replicator(&z0, &lam, eq.theta_total, sc.horizons.tau_end, sc.analysis.samples, &sc.solver)?;
    let outcome = outcome_of(&traj, sc)?;
    let table = replicator_table("reduced", sc, &traj);
    let report = ReducedReport {
        n: sc.n(),
        tau_end: sc.horizons.tau_end,
        equilibrium: eq,
        lambda: lam.lambda,
        outcome,
        stats: traj.stats,
    };
    Ok((Report::SimulateReduced(report), vec![table]))
}

fn predicted_winner(sc: &Scenario, eq: &NeutralEquilibrium) -> (Option<usize>, Option<String>) {
    let allowed = TraitMask::from_indices(&[1, 2]).expect("valid traits");
    if !sc.perturbations.mask.is_subset_of(allowed) {
        return (None, Some(format!("mask {} is not within {{1,2}}", sc.perturbations.mask)));
    }
    match predict_exclusion_winner(&sc.perturbations, eq) {
        Ok(w) => (Some(w + 1), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn compare(sc: &Scenario) -> Result<(Report, Vec<Table>), CliError> {
    let n = sc.n();
    let cmp = compare_systems(sc, sc.epsilon, sc.horizons.tau_end, sc.analysis.samples, &sc.solver, &sc.solver)?;
    let eq = neutral_equilibrium(&sc.neutral, sc.perturbations.mask)?;
    let sp = realize_traits(&sc.neutral, &sc.perturbations, sc.epsilon)?;

    let projected: Vec<Vec<f64>> = cmp.full.states.iter().map(|s| project_slow(s, &sp, &eq).z).collect();
    let mut t = Table::new("compare");
    t.column("tau", "slow time");
    t.column("t", "full time tau / epsilon");
    t.column_group(labels(n, "z_full"), "z_full_k", "strain k frequency projected from the full system");
    t.column_group(labels(n, "z_reduced"), "z_reduced_k", "strain k frequency from the replicator system");
    t.column("error", "S, single and double distance from the slow-manifold lift of the reduced state");
    for k in 0..cmp.tau_grid.len() {
        let mut row: Vec<Cell> = vec![cmp.tau_grid[k].into(), cmp.full.times[k].into()];
        row.extend(projected[k].iter().map(|&x| Cell::from(x)));
        row.extend(cmp.reduced.states[k].iter().map(|&x| Cell::from(x)));
        row.push(cmp.errors[k].into());
        t.push(row);
    }

    let full_traj = ReplicatorTrajectory {
        times: cmp.tau_grid.clone(),
        states: projected,
        stats: cmp.full.stats,
    };
    let report = CompareReport {
        epsilon: cmp.epsilon,
        t_burn: cmp.t_burn,
        tau0: cmp.tau0,
        tau_end: sc.horizons.tau_end,
        z0: cmp.z0.clone(),
        max_error: cmp.max_error,
        predicted_winner: predicted_winner(sc, &eq).0,
        full_outcome: outcome_of(&full_traj, sc)?,
        reduced_outcome: outcome_of(&cmp.reduced, sc)?,
        full_stats: cmp.full.stats,
        reduced_stats: cmp.reduced.stats,
    };
    Ok((Report::Compare(report), vec![t]))
}

fn classify(sc: &Scenario) -> Result<(Report, Vec<Table>), CliError> {
    let n = sc.n();
    let eq = neutral_equilibrium(&sc.neutral, sc.perturbations.mask)?;
    let lam = invasion_fitness(&sc.perturbations, &eq)?;

    let mut pairs_t = Table::new("pairwise");
    pairs_t.column("strain_a", "first strain of the pair");
    pairs_t.column("strain_b", "second strain of the pair");
    pairs_t.column("lambda_ab", "invasion fitness of a into a resident b");
    pairs_t.column("lambda_ba", "invasion fitness of b into a resident a");
    pairs_t.column("outcome", "Coexistence, ExclusionOf1, ExclusionOf2, Bistability or NonGeneric");
    pairs_t.column("survivor", "sole surviving strain of the pair, empty otherwise");
    let mut pairwise = Vec::new();
    for (i, j, outcome) in pairwise_outcomes(&lam) {
        let survivor = outcome.and_then(|o| o.survivor()).map(|k| if k == 0 { i + 1 } else { j + 1 });
        let label = outcome.map(|o| format!("{o:?}"));
        pairs_t.push(vec![
            (i + 1).into(),
            (j + 1).into(),
            lam.lambda[(i, j)].into(),
            lam.lambda[(j, i)].into(),
            label.as_deref().unwrap_or("NonGeneric").into(),
            Cell::Text(survivor.map_or(String::new(), |s| s.to_string())),
        ]);
        pairwise.push(PairEntry {
            strain_a: i + 1,
            strain_b: j + 1,
            lambda_ab: lam.lambda[(i, j)],
            lambda_ba: lam.lambda[(j, i)],
            outcome: label,
            survivor,
        });
    }

    let mut lam_t = Table::new("invasion_fitness");
    lam_t.column("strain", "invading strain i");
    lam_t.column_group(labels(n, "lambda"), "lambda_j", "invasion fitness of i into a resident j");
    for i in 0..n {
        let mut row: Vec<Cell> = vec![(i + 1).into()];
        row.extend(lam.lambda.row(i).iter().map(|&x| Cell::from(x)));
        lam_t.push(row);
    }

    let z0 = sc.initial_frequencies()?;
    let traj = integrate_replicator(&z0, &lam, eq.theta_total, sc.horizons.tau_end, sc.analysis.samples, &sc.solver)?;
    let (predicted_winner, prediction_note) = predicted_winner(sc, &eq);
    let report = ClassifyReport {
        n,
        tau_end: sc.horizons.tau_end,
        lambda: lam.lambda,
        pairwise,
        predicted_winner,
        prediction_note,
        outcome: outcome_of(&traj, sc)?,
    };
    Ok((Report::Classify(report), vec![pairs_t, lam_t]))
}

fn scaling(sc: &Scenario, threads: Option<usize>) -> Result<(Report, Vec<Table>), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let a = &sc.analysis;
    let report = pool.install(|| epsilon_scaling_study(sc, &a.scaling_epsilons, a.scaling_tau_end, a.scaling_samples, &sc.solver))?;

    let mut t = Table::new("scaling");
    t.column("epsilon", "perturbation size");
    t.column("tau0", "slow time at which the comparison starts");
    t.column("error", "largest reduction error over the grid");
    t.column("residual", "residual of the log-log fit, NaN when degenerate");
    for k in 0..report.epsilons.len() {
        let residual = report.residuals.get(k).copied().unwrap_or(f64::NAN);
        t.push(vec![report.epsilons[k].into(), report.tau0s[k].into(), report.errors[k].into(), residual.into()]);
    }
    Ok((Report::Scaling(report), vec![t]))
}
