use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An integral of the reciprocal weight (or another singular integrand) does not converge.
    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("monotonicity hypothesis fails: {0}")]
    HypothesisFailed(String),

    /// `lambda * M + K` is not numerically positive definite.
    #[error("shifted operator is not coercive for lambda = {lambda}")]
    NotCoercive { lambda: f64 },

    #[error("factorization failed at pivot {pivot}: value {value:e}")]
    Factorization { pivot: usize, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
