use thiserror::Error;

/// Errors produced by the estimators, samplers and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SobolError {
    /// Output variance at or below the degeneracy threshold; the output is
    /// effectively constant and the index is undefined.
    #[error("degenerate output variance {variance:e} (threshold {threshold:e})")]
    DegenerateVariance { variance: f64, threshold: f64 },

    #[error("confidence level {0} must lie strictly inside (0, 1)")]
    InvalidLevel(f64),

    #[error("invalid neighbour count k = {k} for {n} rows: {reason}")]
    InvalidK { k: usize, n: usize, reason: &'static str },

    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("model `{0}` has no analytic truth")]
    MissingTruth(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{failed} of {reps} replications failed (first error: {first})")]
    TooManyFailures {
        failed: usize,
        reps: usize,
        first: Box<SobolError>,
    },
}

pub type Result<T, E = SobolError> = std::result::Result<T, E>;
