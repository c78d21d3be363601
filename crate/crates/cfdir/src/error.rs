//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})"
    )]
    NonConvergence { sweeps: usize, residual: f64 },

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("source latent is not positive-class (logit {0})")]
    SourceNotPositive(f64),

    #[error("no baseline found: minimum probability {probability} (at alpha {alpha}) exceeds threshold {tau}")]
    NoBaselineFound {
        probability: f64,
        alpha: f64,
        tau: f64,
    },

    #[error("mismatched latent coverage: {0}")]
    MismatchedCoverage(String),

    #[error("sample {index} failed: {source}")]
    SampleFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    #[error("remote model: {0}")]
    Remote(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("artifact verification failed: {0}")]
    Verification(String),

    #[error("refusing to overwrite {0} (pass --force to allow)")]
    WouldOverwrite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn dim(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
