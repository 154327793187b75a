use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A covariance matrix that violates the uncertainty relation or is not
    /// positive definite.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The stroboscopic map has no attracting fixed point.
    #[error("unstable steady state (spectral radius {spectral_radius})")]
    Unstable { spectral_radius: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn invalid_arg(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
