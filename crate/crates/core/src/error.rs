use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by profile construction, simulation, estimation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("time grid needs at least 2 points, got {0}")]
    GridTooShort(usize),

    #[error("correlation {value} at t={index} is outside [-1, 1]")]
    ProfileOutOfRange { index: usize, value: f64 },

    #[error("increment correlation {value} at i={index} is outside [-1, 1]")]
    IncrementInfeasible { index: usize, value: f64 },

    #[error("profile table has {got} values but the grid has {expected} points")]
    TableLength { expected: usize, got: usize },

    #[error("invalid profile spec `{spec}`: {reason}")]
    ProfileSpec { spec: String, reason: String },

    #[error("time index {index} is outside the grid 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate variance estimate (x: {x}, y: {y})")]
    DegenerateVariance { x: f64, y: f64 },

    #[error("negative variance estimate (w: {w}, u: {u})")]
    NegativeVarianceEstimate { w: f64, u: f64 },

    #[error("exponent {exponent} exceeds the safe range")]
    NumericRange { exponent: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("T={len}, replication {rep}: {source}")]
    Replication {
        len: usize,
        rep: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
