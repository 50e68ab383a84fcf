use thiserror::Error;

#[derive(Debug, Error)]
pub enum DwtError {
    /// Invalid weight spec, experiment config or CLI input.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument outside the operation's domain (e.g. `k = 0` for a
    /// geometric mean).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("tolerance {tol:e} unreachable: {detail}")]
    ToleranceUnreachable { tol: f64, detail: String },
    #[error("step budget of {budget} exhausted: {detail}")]
    Budget { budget: u64, detail: String },
    #[error("accumulation window is unbounded at depth {depth}")]
    UnboundedWindow { depth: usize },
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DwtError> = std::result::Result<T, E>;
