use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field length {found} does not match grid size {expected}")]
    FieldLength { expected: usize, found: usize },

    #[error("field contains non-finite values")]
    NonFiniteInput,

    #[error("inadmissible exponent pair (p={p}, r={r}) in dimension {d}")]
    Inadmissible { p: f64, r: f64, d: usize },

    #[error("time {t} lies outside the stored range [0, {end}]")]
    OutOfRange { t: f64, end: f64 },

    #[error("atom {index}: mark norm {norm} is outside the unit ball (0, 1]")]
    MarkOutsideBall { index: usize, norm: f64 },

    #[error("atom {index}: rate {rate} is not positive")]
    NonpositiveRate { index: usize, rate: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("solution became non-finite at t = {time}")]
    NonFinite { time: f64 },

    #[error("trajectory and jump path disagree: {0}")]
    MismatchedPath(String),

    #[error("negative argument {0} passed to the truncation function")]
    NegativeArgument(f64),

    #[error("{0}")]
    InvalidInput(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
