use thiserror::Error;

/// Errors produced by pulse construction, optimization, and gate evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters or configuration (CLI exit code 2).
    #[error("config error: {0}")]
    Config(String),

    /// A numerical procedure failed to converge or hit an ill-conditioned
    /// problem (CLI exit code 3).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Adaptive quadrature hit the depth limit before reaching tolerance.
    #[error("quadrature did not converge: achieved tolerance {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
