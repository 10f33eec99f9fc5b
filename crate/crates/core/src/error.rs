use thiserror::Error;

/// Errors raised by game construction, transforms and the equilibrium builders.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
