use thiserror::Error;

/// Errors raised across the boundary-geometry operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("metrics are defined on different boundaries")]
    BoundaryMismatch,
    #[error("not Moebius equivalent (witness {witness:?}): {detail}")]
    NotMoebius { witness: Vec<String>, detail: String },
    #[error("undecided at precision {0} bits")]
    Undecided(u32),
    #[error("surjectivity violation: projection minimum is {0}")]
    SurjectivityViolation(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("projection not converged: {0}")]
    NotConverged(String),
    #[error("internal consistency error: {0}")]
    Inconsistent(String),
    #[error("undecided: {0}")]
    Ambiguous(String),
    #[error("ill-conditioned input: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}
