use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the controllers, the learner and the experiment driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("integration failed: non-finite value at RK4 stage {stage} (t = {time})")]
    Integration { stage: usize, time: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate constraint geometry: b·bᵀ·d·dᵀ − (b·dᵀ)² = {determinant:e}")]
    DegenerateGeometry { determinant: f64 },

    #[error("CLF and CBF conditions are incompatible (w = {w:e}, v = {v:e})")]
    Incompatible { w: f64, v: f64 },

    #[error("no active set of the pointwise QP is feasible")]
    QpInfeasible,

    #[error("safety constraint violated with no control authority (c − ρΓ = {cbf_level:e})")]
    InfeasibleSafety { cbf_level: f64 },

    #[error("stability constraint violated with no control authority (a + κζ = {clf_level:e})")]
    InfeasibleStability { clf_level: f64 },

    #[error("kernel matrix is ill-conditioned (condition estimate {condition:e}, jitter {jitter:e})")]
    IllConditioned { condition: f64, jitter: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
