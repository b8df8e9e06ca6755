//! Error type shared across the crate.

/// Iteration state returned when a solver hits its iteration cap.
#[derive(Debug, Clone)]
pub struct NonConvergence {
    /// Which computation failed to converge.
    pub what: String,
    /// Iterations performed before giving up.
    pub iterations: usize,
    /// Residual of the best iterate.
    pub residual: f64,
    /// Best iterate found.
    pub best: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("model assumption violated: {0}")]
    Assumption(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("{}: no convergence after {} iterations (residual {:.3e})",
            .0.what, .0.iterations, .0.residual)]
    NonConvergence(Box<NonConvergence>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn non_convergence(
        what: impl Into<String>,
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    ) -> Self {
        Error::NonConvergence(Box::new(NonConvergence {
            what: what.into(),
            iterations,
            residual,
            best,
        }))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
