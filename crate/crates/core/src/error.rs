use serde::Serialize;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a time evolution was stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortDiagnostic {
    pub step: usize,
    pub t: f64,
    pub norm_drift: f64,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("derivative order {0} is not supported (use 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("field too degenerate to define a phase: {node_fraction:.3} of points are nodes")]
    DegeneratePhase { node_fraction: f64 },
    #[error("numerical abort at step {} (t = {}): {}", .0.step, .0.t, .0.reason)]
    NumericalAbort(AbortDiagnostic),
    #[error("branch overlap {overlap:.4} exceeds the 1% limit; outcome is ill-defined")]
    BranchOverlap { overlap: f64 },
    #[error("assignment space of size {size} exceeds the limit {limit}")]
    CombinatorialGuard { size: u128, limit: u128 },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
