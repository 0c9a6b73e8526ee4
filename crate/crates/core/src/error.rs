use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, sizes or parameter values that cannot work together.
    #[error("configuration error: {0}")]
    Config(String),
    /// A call that violates an operation's preconditions (bad action index, length mismatch).
    #[error("usage error: {0}")]
    Usage(String),
    /// Input outside the mathematical domain of a function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite values produced or consumed during training.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("aggregation error: {0}")]
    Aggregation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 2,
            _ => 1,
        }
    }
}
