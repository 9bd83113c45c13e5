use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidSpec(String),
    #[error("cell count {count} exceeds the configured cap {cap}")]
    CellOverflow { count: usize, cap: usize },
    #[error("incompatible lattices: {0}")]
    SpecMismatch(String),
    #[error("generator universe mismatch: {left} vs {right} modes")]
    UniverseMismatch { left: usize, right: usize },
    #[error("singular matrix ({context}); smallest singular value {smallest_singular:.3e}")]
    Singular {
        context: String,
        smallest_singular: f64,
    },
    #[error("quadratic form is not positive definite on the constrained subspace (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("singular KKT system: constraint rank {rank} of {rows} rows")]
    SingularKkt { rank: usize, rows: usize },
    #[error("expansion did not converge: truncation change {change:.3e} exceeds {tolerance:.3e}")]
    NonConvergence { change: f64, tolerance: f64 },
    #[error("shooting solver failed: {0}")]
    ShootingFailed(String),
    #[error("large field: |dA| = {value:.3e} exceeds threshold {threshold:.3e}")]
    LargeField { value: f64, threshold: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("oracle check failed: {0}")]
    OracleFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
