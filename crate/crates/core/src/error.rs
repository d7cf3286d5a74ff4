use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A structural defect or conservation check exceeded its abort threshold.
    #[error("integrator failure at t = {time:.6}: {message}")]
    Integrator { time: f64, message: String },

    #[error("truncation leakage {leakage:.3e} exceeds {limit:.1e} at t = {time:.6}; raise n_max or shorten t_final")]
    Leakage { time: f64, leakage: f64, limit: f64 },

    #[error("basis dimension {dimension} exceeds the memory cap {cap}")]
    DimensionCap { dimension: usize, cap: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
