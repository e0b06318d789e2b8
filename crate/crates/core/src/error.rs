use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on the inputs was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Covariance has no eigenvalue above the floor.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A dictionary atom collapsed to the zero vector.
    #[error("degenerate atom {index} ({label}): column is all zeros")]
    DegenerateAtom { index: usize, label: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
