use thiserror::Error;

/// Errors raised by the laboratory.
///
/// `Input` covers violated preconditions (bad parameters, malformed data).
/// `Resource` is raised when a computation would need to reach past a declared
/// window or horizon; the payload names how far the computation got.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("resource error: {what} (reached {reached})")]
    Resource { what: String, reached: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

pub(crate) fn resource<T>(what: impl Into<String>, reached: usize) -> Result<T> {
    Err(Error::Resource {
        what: what.into(),
        reached,
    })
}
