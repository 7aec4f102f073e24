use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("variable mismatch: `{0}` vs `{1}`")]
    VariableMismatch(String, String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("truncation: {0}")]
    Truncation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("convergence: {0}")]
    Convergence(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
