use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-differentiable fidelity")]
    NonDifferentiable,

    #[error("step condition of the residual bound fails: δ_0 = {delta0} must be ≤ δ_max = {delta_max}")]
    StepExceedsBound { delta0: f64, delta_max: f64 },

    #[error("quadrature needs d ≤ 3 (got d = {dim}); use the Monte-Carlo estimator")]
    QuadratureDimension { dim: usize },

    #[error("traces do not share one configuration: {0}")]
    MixedConfigs(String),

    #[error("schedule precondition failed: {0}")]
    Schedule(String),

    #[error("too few trace points for a fit: {found} < {needed}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("grid minimizer at boundary; widen grid")]
    GridBoundary,

    #[error("annealing needs m ≤ N (m = {stages}, N = {iters})")]
    AnnealStages { stages: usize, iters: usize },

    #[error("problem outside the certified class: {0}")]
    Uncertifiable(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
