use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} labels, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("index {index} out of range for {n} reports")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid edge ({i}, {j}): {reason}")]
    InvalidEdge { i: usize, j: usize, reason: &'static str },

    #[error("label {label} is not below cluster count {k}")]
    LabelOutOfRange { label: usize, k: usize },

    #[error("cluster count k = {k} is invalid: {reason}")]
    InvalidClusterCount { k: usize, reason: &'static str },

    #[error("average degree {gamma} is invalid for n = {n}")]
    InvalidGamma { gamma: f64, n: usize },

    #[error("power-law table covers {capacity} reports, {requested} requested")]
    TableTooSmall { requested: usize, capacity: usize },

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
