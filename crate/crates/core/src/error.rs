use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("s = {s} outside schedule range [{lo}, {hi}]")]
    OutOfRange { s: f64, lo: f64, hi: f64 },

    #[error("no critical point: Gamma(s) - Jcal(s)|J| does not change sign on [{lo}, {hi}]")]
    NoCriticalPoint { lo: f64, hi: f64 },

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration failed at s = {s}: {reason} (steps = {steps})")]
    Integration { s: f64, steps: usize, reason: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("kink density is zero; correlator undefined")]
    ZeroDensity,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
