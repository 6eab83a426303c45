//! Error type shared by the whole crate.

use thiserror::Error;

/// Errors produced by kernel evaluation, solvers and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Two points or vectors that must agree in length do not.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dataset with zero rows where at least one is required.
    #[error("empty dataset")]
    EmptyDataset,

    /// Invalid parameters or configuration (bad q, negative widths, ...).
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical procedure failed to reach its tolerance (quadrature,
    /// non-finite objective, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A linear solve or optimizer failed outright.
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }
}
