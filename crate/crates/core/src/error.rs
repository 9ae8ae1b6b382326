use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = KboError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KboError {
    #[error("stability index alpha = {0} outside (0, 2]")]
    InvalidAlpha(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate initialization box in coordinate {coord}: lo = {lo}, hi = {hi}")]
    DegenerateBox { coord: usize, lo: f64, hi: f64 },

    #[error("no particle has finite energy")]
    AllEnergiesInfinite,

    #[error("particle {particle} has a non-finite position after step {step}")]
    NonFinitePosition { particle: usize, step: usize },

    #[error("unknown objective `{0}`")]
    UnknownObjective(String),

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl KboError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        KboError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
