use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// The three variants map one-to-one onto the command-line exit codes
/// (2, 3 and 4 respectively).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("solver did not converge: {message} (best bracket [{lower}, {upper}])")]
    NonConvergence { message: String, lower: f64, upper: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
