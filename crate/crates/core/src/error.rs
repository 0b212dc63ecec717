use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:.3e}): {what}")]
    NoConvergence { what: String, iterations: usize, residual: f64 },
    #[error("left the Pohozaev region G_mu at iteration {iteration} (indicator {indicator:.3e})")]
    LeftPohozaevSet { iteration: usize, indicator: f64, energy_trace: Vec<f64> },
    #[error("shooting failed: {0}")]
    Shooting(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
