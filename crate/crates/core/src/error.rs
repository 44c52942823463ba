use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The input representation of α cannot certify the requested quantity.
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("not irrational: {0}")]
    NotIrrational(String),

    #[error("invalid alpha: {0}")]
    InvalidSpec(String),

    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    /// A Dirichlet-type search has no admissible solution.
    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("resource exhausted: {0}")]
    Resource(String),

    #[error("range too large for direct summation: {0}")]
    RangeTooLarge(String),
}

impl Error {
    pub(crate) fn arg(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
