use thiserror::Error;

use crate::lpsolver::LpError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("degenerate estimate: {0}")]
    DegenerateEstimate(String),
    #[error("empty ambiguity set: centre distance {distance} exceeds radius sum {radius_sum}")]
    EmptyIntersection { distance: f64, radius_sum: f64 },
    #[error("empty ambiguity set: {0}")]
    EmptyAmbiguitySet(String),
    #[error("only order p = 1 is supported by the LP reformulation, got p = {0}")]
    UnsupportedOrder(u32),
    #[error("worst-case LP ended with status {0}")]
    Solver(String),
    #[error("calibration failed for every grid point: {0}")]
    Calibration(String),
    #[error("row {row}: {message}")]
    Ingestion { row: usize, message: String },
    #[error("instance {instance}: {source}")]
    Instance { instance: usize, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
