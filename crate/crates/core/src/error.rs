use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed bracket entry ({i}, {j}, {k}) in dimension {dim}: {reason}")]
    MalformedEntry {
        i: usize,
        j: usize,
        k: usize,
        dim: usize,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("action matrix {index} is not a derivation (max Leibniz residual {residual:.3e})")]
    NotADerivation { index: usize, residual: f64 },

    #[error("action is not a Lie homomorphism (max residual {residual:.3e})")]
    NotAHomomorphism { residual: f64 },

    #[error("metric is not positive definite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is singular or ill-conditioned (condition number {condition:.3e})")]
    Singular { condition: f64 },

    #[error("no pre-Einstein derivation found at tolerance (residual {residual:.3e})")]
    PreEinsteinNotFound { residual: f64 },

    #[error("not an Einstein-derivation candidate: {0}")]
    NotEinsteinCandidate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("T not proportional to Killing form on ideal {ideal} (fit residual {residual:.3e})")]
    BetaFit { ideal: usize, residual: f64 },

    #[error("construction failed: Einstein deviation {deviation:.3e}, Ricci spectrum {spectrum:?}")]
    ConstructionFailure { deviation: f64, spectrum: Vec<f64> },

    #[error("degenerate Killing pairing: defect dimension {defect}")]
    DegeneratePairing { defect: usize },

    #[error("torus test requires a torus: {0}")]
    NotATorus(String),
}

pub type Result<T> = std::result::Result<T, Error>;
