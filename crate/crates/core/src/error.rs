//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on plain numeric input failed.
    #[error("domain error: {0}")]
    Domain(String),

    /// A file could not be parsed under the documented schema.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A record violated a data invariant; `line` is 1-based and points at
    /// the offending row where applicable.
    #[error("validation error at {path}:{line}: {msg}")]
    Validation {
        path: String,
        line: usize,
        msg: String,
    },

    /// The regression design matrix is rank-deficient.
    #[error("singular fit: {0}")]
    Singular(String),

    /// A quadratic fit opened downward or degenerated to a line.
    #[error("no interior minimum: {0}")]
    NoInteriorMinimum(String),

    /// The loss-surface optimizer did not converge from any start; the best
    /// candidate and its objective are carried for inspection.
    #[error("optimizer did not converge after {starts} starts (best objective {objective:.3e})")]
    NonConvergence {
        starts: usize,
        objective: f64,
        best: Box<crate::surface::LossSurface>,
    },

    /// Closed-form learning-rate expressions need a positive denominator.
    #[error("unbounded step: curvature and noise terms vanish along the gradient")]
    UnboundedStep,

    /// Mismatched vector or matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
