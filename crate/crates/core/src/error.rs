//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the model, the solver, and the recovery stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar argument is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation needs more input than was provided (e.g. a pairwise
    /// separation of fewer than two angles).
    #[error("undefined input: {0}")]
    UndefinedInput(String),

    /// The scene sampler could not place the requested angles at the
    /// requested separation within the attempt budget.
    #[error("scene sampler exhausted {attempts} attempts: {reason}")]
    Infeasible { attempts: usize, reason: String },

    /// A least-squares subsystem lost rank; `cluster` names the offender
    /// when one can be identified.
    #[error("singular system{}: {reason}", cluster.map(|c| format!(" (cluster {c})")).unwrap_or_default())]
    Singular {
        cluster: Option<usize>,
        reason: String,
    },

    /// Non-finite values or an eigensolver failure inside an iteration.
    #[error("numerical failure at iteration {iteration}: {reason}")]
    Numerical { iteration: usize, reason: String },

    /// Malformed scene/observation text during deserialization.
    #[error("parse error: {0}")]
    Parse(String),

    /// I/O failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
