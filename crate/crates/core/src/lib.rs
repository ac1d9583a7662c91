//! Multi-strain SIS co-colonization dynamics.
//!
//! The crate integrates the full `1 + N + N²` compartment system and its
//! slow-manifold replicator reduction, computes pairwise invasion fitness
//! from five trait dimensions, classifies competitive outcomes and measures
//! how closely the reduction tracks the full system.

pub mod error;
pub mod full;
pub mod matrix;
pub mod model;
pub mod ode;
pub mod outcome;
pub mod scenario;
pub mod slow;
pub mod validation;

pub use error::{Error, Result};
pub use full::{
    force_of_infection, full_rhs, integrate_full, integrate_full_at, neutral_scalar_observables,
    slow_manifold_state, FullState, Trajectory,
};
pub use matrix::SquareMatrix;
pub use model::{
    basic_reproduction_numbers, neutral_equilibrium, realize_traits, NeutralEquilibrium,
    NeutralParameters, StrainParameters, Trait, TraitMask, TraitPerturbations,
};
pub use ode::{Constraint, IntegrationStats, SolverConfig};
pub use outcome::{
    classify_pair, detect_persistent_set, predict_exclusion_winner, symmetric_lyapunov, LimitKind,
    OutcomeReport, PairwiseOutcome,
};
pub use scenario::{bundled_scenario, load_scenario, parse_scenario, resolve_scenario, Scenario};
pub use slow::{
    integrate_replicator, integrate_replicator_at, invasion_fitness, per_trait_slow_rhs,
    replicator_rhs, InvasionFitnessMatrix, ReplicatorTrajectory, SimplexState,
};
pub use validation::{
    compare_systems, epsilon_scaling_study, project_slow, reduction_error, reduction_error_profile,
    Comparison, ScalingReport, SlowProjection,
};
