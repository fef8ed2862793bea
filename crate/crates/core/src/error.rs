use num_bigint::BigUint;
use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no approximation: {0}")]
    NoApproximation(String),

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("could not factor cofactor {0}")]
    FactorizationFailed(BigUint),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by the caller's arguments.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::NoApproximation(_)
                | Error::InfeasibleSplit(_)
                | Error::UnknownSuite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
