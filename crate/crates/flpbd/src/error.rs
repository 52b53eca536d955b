//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid scenario set: {0}")]
    InvalidScenarioSet(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("first-stage solution is infeasible: {0}")]
    InfeasibleFirstStage(String),

    #[error("correlated sampling needs at least two customers")]
    TooFewCustomers,

    #[error("degenerate correlation structure: all pairwise pseudo-distances are equal")]
    DegenerateCorrelation,

    #[error("insufficient points: need {needed}, file provides {available}")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),

    #[error("external solver failed: {0}")]
    ExternalSolver(String),

    #[error("objective mismatch: solver reported {reported}, recourse evaluation gives {evaluated}")]
    ObjectiveMismatch { reported: f64, evaluated: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
