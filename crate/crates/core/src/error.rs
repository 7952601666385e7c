use thiserror::Error;

/// Errors produced by the factorization routines and their IO layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left:?} vs {right:?} ({context})")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
        context: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("zero basis; spectral norm undefined for step size")]
    ZeroBasis,

    #[error("degenerate row {0}: squared norm of H row is zero")]
    DegenerateRow(usize),

    #[error("no significant component above the energy floor")]
    NoSignificantComponent,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
