use thiserror::Error;

/// Errors produced by the KSS library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KssError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("size mismatch: expected {expected}, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    /// The constant-coefficient metric operator has a zero (or negative) eigenvalue.
    #[error("energy metric is singular: {0}")]
    SingularMetric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("reference solution has zero norm")]
    ZeroReference,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, KssError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(KssError::SizeMismatch { expected, found })
    }
}
