use thiserror::Error;

/// Errors raised by the matrix model, the spectral routines and the experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bandwidth {b} does not divide matrix dimension {n}")]
    Divisibility { n: usize, b: usize },

    #[error("block count m = {m} is below 3; the three block diagonals would collide")]
    TooFewBlocks { m: usize },

    #[error("dimension {n} exceeds the dense-memory guard of {cap}")]
    DenseGuard { n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("expected a unit vector, got norm {norm}")]
    NotUnit { norm: f64 },

    #[error("vector is compressible; coordinate window only applies to incompressible vectors")]
    Compressible,

    #[error("support enumeration needs {supports} subsets, budget is {budget}")]
    BudgetExceeded { supports: u128, budget: u128 },

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("singular input: {0}")]
    Singular(String),

    #[error("branch selection failed: {0}")]
    Branch(String),

    #[error("unsupported moment order p = {p} for atom kind {kind}")]
    UnsupportedMoment { p: f64, kind: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
