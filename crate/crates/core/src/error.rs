use thiserror::Error;

/// Error type shared across the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient samples: need {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("solver did not converge: residual {residual:.3e} exceeds {tolerance:.3e}")]
    SolverFailure { residual: f64, tolerance: f64 },

    #[error("chain unstable: |phi({x},{y})| = {value:.3e} exceeds 1e6")]
    Instability { x: i32, y: i32, value: f64 },

    #[error("chain aborted after {snapshots_taken} snapshots: {reason}")]
    ChainAborted {
        reason: String,
        snapshots_taken: usize,
    },

    #[error("ensemble failed stationarity diagnostics: {0}")]
    NonStationary(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("checksum mismatch for {path}: expected {expected}, got {actual}")]
    Checksum {
        path: String,
        expected: String,
        actual: String,
    },

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn geometry(msg: impl Into<String>) -> Self {
        Error::Geometry(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: msg.into(),
        }
    }
}
