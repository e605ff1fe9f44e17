use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a mathematical precondition (zero receive
    /// vector, negative SINR, mismatched dimensions, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is internally inconsistent or geometrically
    /// impossible.
    #[error("configuration error: {0}")]
    Config(String),

    /// An iterative numerical procedure broke down (non-bracketing
    /// bisection, non-positive MSE, singular system).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A frame phase was executed out of order.
    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
