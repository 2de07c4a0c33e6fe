use thiserror::Error;

/// Error taxonomy shared by the whole crate. The CLI maps these onto exit
/// codes, so the categories are part of the public contract.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text or config rejected by the parser.
    #[error("parse error: {0}")]
    Parse(String),
    /// Argument outside the mathematical domain (e.g. non-positive weight).
    #[error("domain error: {0}")]
    Domain(String),
    /// Evaluation would overflow the double range.
    #[error("range error: {0}")]
    Range(String),
    /// Iterative solver failed to converge or factorization broke down.
    #[error("solver error: {0}")]
    Solver(String),
    /// Caller violated an API contract (shape mismatch, asymmetric input).
    #[error("contract error: {0}")]
    Contract(String),
}

impl Error {
    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
    pub fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
