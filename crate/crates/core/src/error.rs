use thiserror::Error;

/// Errors raised by the solvers and the configuration layer.
#[derive(Debug, Error)]
pub enum MemsError {
    #[error("configuration error: {0}")]
    Config(String),

    /// The gap left the region where the nonlinearity is controlled.
    #[error("quench imminent: gap {gap:.6e} at node {node} (t = {time:.6e})")]
    QuenchImminent { node: usize, gap: f64, time: f64 },

    #[error("horizon too large: gap {min_gap:.6e} fell below {bound:.6e} at t = {time:.6e}")]
    HorizonTooLarge { min_gap: f64, bound: f64, time: f64 },

    #[error("{solver} did not converge within {iterations} iterations")]
    NotConverged {
        solver: &'static str,
        iterations: usize,
        ratios: Vec<f64>,
    },

    #[error("step size underflow at t = {time:.6e}")]
    Stiffness { time: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MemsError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        MemsError::Config(msg.into())
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            MemsError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, MemsError>;
