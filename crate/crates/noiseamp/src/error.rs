use thiserror::Error;

/// Errors shared across the simulation, analytics and tomography modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("required Fock cutoff {required} exceeds hard maximum {hard_max}")]
    CutoffOverflow { required: usize, hard_max: usize },

    #[error("truncation error too large: trace deficit {deficit:.3e} exceeds tolerance {tol:.3e}")]
    Truncation { deficit: f64, tol: f64 },

    #[error("heralding impossible: success probability {ps:.3e} below floor")]
    HeraldImpossible { ps: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("series failed to converge within {max_terms} terms")]
    SeriesDivergence { max_terms: usize },

    #[error("quadrature failed: {0}")]
    Integration(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("tomography failure: {0}")]
    Tomography(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
