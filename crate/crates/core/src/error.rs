use thiserror::Error;

use crate::model::ExtendedPoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// A scenario field failed validation; `field` is a dotted path into the document.
    #[error("invalid scenario at `{field}`: {message}")]
    InvalidScenario { field: String, message: String },

    #[error("loading horizon too short: {remaining:.6} veh still on link `{link}` after {steps} steps")]
    HorizonTooShort {
        link: String,
        remaining: f64,
        steps: usize,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("line search failed after {trials} trials (residual norm {residual_norm:e})")]
    StepFailure { trials: usize, residual_norm: f64 },

    #[error("inner solve stalled after {iterations} iterations (inner gap {gap:e})")]
    InnerStall {
        iterations: usize,
        gap: f64,
        best: Box<ExtendedPoint>,
    },

    #[error("degenerate iterate: {0}")]
    DegenerateIterate(String),

    #[error("cannot bound the feasible set: {0}")]
    CannotBound(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvalidScenario {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
