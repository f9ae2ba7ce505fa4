use thiserror::Error;

/// Errors raised by the tuple, inequality and matrix layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs violate an operation's preconditions (lengths, ranges, sums).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Inputs lie outside the mathematical domain (non-SPD, singular, branch cut).
    #[error("domain error: {0}")]
    Domain(String),
    /// An admissible equal-norm pair did not coincide entrywise.
    #[error("rigidity violated: equal-norm admissible pair differs by {gap:e} (limit {limit:e})")]
    Rigidity { gap: f64, limit: f64 },
    /// Writing records failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
