//! Error type shared by all numeric routines.

use thiserror::Error;

/// Library-wide error type.
///
/// `ContractViolation` flags a caller-side misuse (bad shapes, empty inputs,
/// non-Hermitian matrices where Hermitian is required). `NumericFailure`
/// flags a breakdown inside an otherwise valid computation (SVD that did not
/// converge, a Cholesky pivot that is not positive). The distinction maps to
/// CLI exit codes 2 and 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::NumericFailure(msg.into())
    }
}
