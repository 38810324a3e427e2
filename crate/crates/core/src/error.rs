use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The market or measure file is not well-formed.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// The input parsed but violates a model invariant.
    #[error("invalid market: {0}")]
    Validation(String),

    /// An operation was called outside its domain.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Vectors or matrices of incompatible sizes.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A computed object failed exact re-verification.
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

pub type Result<T> = std::result::Result<T, Error>;
