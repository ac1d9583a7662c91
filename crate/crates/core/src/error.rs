use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures raised by the model, the integrators and the scenario loader.
///
/// Variants split into two families: configuration problems (bad
/// parameters, inconsistent dimensions, unparsable files) and numerical
/// failures (step-size underflow, positivity or simplex violations).
/// [`Error::is_numerical`] tells them apart for exit-code mapping.
#[derive(Debug, Error)]
pub enum Error {
    #[error("basic reproduction number R0 = {r0} <= 1: disease-free regime has no endemic equilibrium")]
    Subcritical { r0: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("realized {entry} = {value} is out of range ({reason})")]
    RealizedOutOfRange {
        entry: String,
        value: f64,
        reason: &'static str,
    },

    #[error("trait mask mismatch: perturbations use {perturbations}, equilibrium was computed for {equilibrium}")]
    MaskMismatch {
        perturbations: String,
        equilibrium: String,
    },

    #[error("trait index {0} is outside 1..=5")]
    TraitOutOfRange(u8),

    #[error("non-generic input: {0}")]
    NonGeneric(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudget { t: f64, max_steps: usize },

    #[error("negative excursion {value:e} in component {index} at t = {t}")]
    NegativeExcursion { t: f64, index: usize, value: f64 },

    #[error("simplex drift {drift:e} before renormalization at tau = {t}")]
    SimplexDrift { t: f64, drift: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("analysis window {window} exceeds trajectory span {span}")]
    WindowTooLong { window: f64, span: f64 },

    #[error("grid coverage failure: {0}")]
    GridCoverage(String),

    #[error("scenario error in `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical machinery rather than of the
    /// configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepSizeUnderflow { .. }
                | Error::StepBudget { .. }
                | Error::NegativeExcursion { .. }
                | Error::SimplexDrift { .. }
                | Error::NonFinite { .. }
        )
    }

    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
