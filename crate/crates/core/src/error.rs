use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("unsupported moment: {0}")]
    UnsupportedMoment(String),

    #[error(
        "grid too small: {clamp_mass:.3e} of the probability mass reached the clamped region (limit {limit:.3e})"
    )]
    GridTooSmall { clamp_mass: f64, limit: f64 },

    #[error("strategy emitted lambda {lambda} outside [{lo}, {hi}] at step {step}")]
    StrategyOutOfRange {
        step: usize,
        lambda: f64,
        lo: f64,
        hi: f64,
    },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("length mismatch: expected {expected} observations, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
