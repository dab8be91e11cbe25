use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel is singular at the origin")]
    SingularPoint,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("non-monotone error sequence: {0}")]
    NonMonotone(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
