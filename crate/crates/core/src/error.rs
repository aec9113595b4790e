use thiserror::Error;

/// Errors raised by the simulation, pulse design and analysis layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QstError {
    #[error("matrix is not Hermitian: max |h_ij - conj(h_ji)| = {max_asymmetry:e}")]
    NonHermitian { max_asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{n} qutrits requested, full Hilbert-space builders support at most {max}")]
    Capacity { n: usize, max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no convergence after {iterations} iterations (residuals {residuals:?})")]
    NoConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("unphysical regime: {0}")]
    Unphysical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, QstError>;
