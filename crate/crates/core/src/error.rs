//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("non-finite sample: f({t}) = {value}")]
    NonFinite { t: f64, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("metric mismatch: {0}")]
    MetricMismatch(String),

    #[error("oracle supports at most 3 union atoms, got {0}")]
    OracleSupport(usize),

    #[error("simulation blow-up: path {path} at t = {time}: |x| = {norm:.3e}")]
    BlowUp { path: usize, time: f64, norm: f64 },

    #[error("requested time {t} is outside the ensemble grid")]
    OutOfRange { t: f64 },

    #[error("internal solver failure: {0}")]
    Solver(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for usage/config/data problems,
    /// 1 is reserved for completed runs with refuted checks (not an `Error`).
    pub fn exit_code(&self) -> i32 {
        2
    }
}
