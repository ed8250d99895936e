// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

use crate::simgen::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("curves live on different grids")]
    GridMismatch,

    #[error("non-finite value {value} at position {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("split index {k} is not strictly inside segment ({l}, {u})")]
    Index { l: usize, u: usize, k: usize },

    #[error("segment ({l}, {u}) is invalid or too short for interior evaluation (n = {n})")]
    SegmentTooShort { l: usize, u: usize, n: usize },

    #[error("series is empty")]
    EmptySeries,

    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid threshold policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid noise model: {0}")]
    InvalidNoise(String),

    #[error("autoregressive operator norm {norm:.6} is not below {bound} (process would not be stationary)")]
    Stationarity { norm: f64, bound: f64 },

    #[error("scenario violates {} model condition(s): {}", .0.len(), join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
