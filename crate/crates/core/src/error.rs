use thiserror::Error;

/// Errors surfaced by the engine, its evaluation harness, and its I/O layer.
///
/// The variants map onto the CLI exit-code contract: configuration problems,
/// data problems, and numerical failures are distinguishable by the caller.
#[derive(Debug, Error)]
pub enum Error {
    /// Rejected configuration, before any computation runs.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed, inconsistent, or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure inside the estimator or the forecaster
    /// (non-finite state, singular fusion covariance). These abort the run.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A model asked to forecast before it has seen a single update.
    #[error("model not warmed up: {0}")]
    NotReady(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
