//! Error type shared by all engine stages.
//!
//! Variants map onto the failure classes the pipeline contracts name:
//! input parsing, mesh geometry, material admissibility, configuration,
//! linear-algebra breakdowns, nonlinear convergence failures, buckling
//! guards, and degenerate homological systems.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh geometry error: {0}")]
    Geometry(String),

    #[error("material error: {0}")]
    Material(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular matrix at elimination step {step} (pivot magnitude {pivot:.3e})")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("{context}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    #[error("buckling guard tripped: {0}")]
    Buckling(String),

    #[error("degenerate homological system for monomial {monomial}: {msg}")]
    DegenerateMonomial { monomial: String, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
