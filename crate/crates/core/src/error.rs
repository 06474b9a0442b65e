use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto exit codes:
/// parameter/domain errors are usage failures, `Infeasible` means an exact
/// computation refused its work budget and Monte Carlo should be used instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("exact computation infeasible: {0}")]
    Infeasible(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}
