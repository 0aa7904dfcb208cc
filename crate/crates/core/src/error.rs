use thiserror::Error;

/// Errors raised by model construction, bound evaluation and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A model failed one of its invariants. `field` locates the offending
    /// entry, e.g. `components[1].atoms[0]`.
    #[error("invalid model at {field}: {reason}")]
    InvalidModel { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    /// The threshold is at or beyond the essential supremum of the sum, so
    /// no finite tilt attains it.
    #[error("no saddlepoint: x*sigma = {target} is not below the support bound {support}")]
    NoSaddlepoint { target: f64, support: f64 },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn model(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidModel {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
