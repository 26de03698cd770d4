use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("level {level} unsupported: {reason}")]
    UnsupportedLevel { level: u32, reason: String },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("point {point:?} is not covered; nearest covered location {hint:?}")]
    CoverageGap { point: Vec<f64>, hint: Vec<f64> },

    #[error("stage {stage} failed validation for k = {k:?} at z = {z:?}: {detail}")]
    StageValidation {
        stage: usize,
        k: Vec<u32>,
        z: Vec<f64>,
        detail: String,
    },

    #[error("jet rejected: {0}")]
    JetRejected(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
