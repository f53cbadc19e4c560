use thiserror::Error;

/// Errors raised by the engine.
///
/// The command-line front end maps parse errors to its usage exit code,
/// accuracy failures of an iterative method to their own code, and every other
/// variant (domain, precondition, admissibility, ...) to a third.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singularity: {0}")]
    Singularity(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arity error: {0}")]
    Arity(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("inadmissible variation: {0}")]
    Admissibility(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("accuracy failure: {message} (achieved estimate {estimate:e})")]
    Accuracy { message: String, estimate: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
