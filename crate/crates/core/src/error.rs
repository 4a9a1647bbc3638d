//! Error type shared by all library modules.

use thiserror::Error;

/// Errors produced by library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's contract (bad argument, wrong metric
    /// family, parameter out of range, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An impression failed structural validation.
    #[error("invalid impression `{id}`: {problems}")]
    InvalidImpression { id: String, problems: String },

    /// A candidate was expected to carry a pointwise score but does not.
    #[error("candidate `{id}` has no pointwise score")]
    MissingScore { id: String },

    /// A preference lookup named a candidate the table does not know.
    #[error("no preference entry for candidate `{id}`")]
    UnknownCandidate { id: String },

    /// Two position-aligned structures disagree in length.
    #[error("length mismatch in {context}: {left} vs {right}")]
    LengthMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// An order vector is not a permutation of the candidate positions.
    #[error("{context}: order is not a permutation")]
    NotAPermutation { context: &'static str },

    /// A numerical routine could not reach the requested accuracy. Carries the
    /// best estimate achieved and the error bound at the point of failure.
    #[error("numerical failure: {message} (estimate {estimate}, error bound {error_bound})")]
    Numerical {
        message: String,
        estimate: f64,
        error_bound: f64,
    },
}

impl Error {
    pub fn contract(message: impl Into<String>) -> Self {
        Error::Contract(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
