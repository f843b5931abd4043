use thiserror::Error;

/// Errors raised by the estimation and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigenvalues must be sorted in descending order")]
    NotDescending,

    #[error("only {found} of {needed} requested roots map to a physical angle")]
    InsufficientRoots { needed: usize, found: usize },

    #[error("efficiency is undefined: reference subspace captures no power")]
    DegenerateEstimate,

    #[error("post-combining noise covariance on subcarrier {subcarrier} is singular")]
    SingularNoiseCov { subcarrier: usize },

    #[error("empty snapshot set")]
    EmptySnapshots,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
