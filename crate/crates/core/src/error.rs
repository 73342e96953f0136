use thiserror::Error;

/// Errors raised anywhere in the tomography toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },
    #[error("eigendecomposition did not converge")]
    NoConvergence,
    #[error("Cholesky factorization failed: {0}")]
    FactorizationFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("frequency vector is not a probability distribution: {0}")]
    NotAProbability(String),
    #[error("measurement frame is singular after {attempts} attempts")]
    SingularFrame { attempts: usize },
    #[error("estimator did not converge after {iterations} iterations")]
    EstimatorNoConvergence {
        iterations: usize,
        best: Box<crate::estimators::EstimatorReport>,
    },
    #[error("predicted probability underflow for outcome {outcome}")]
    ZeroProbability { outcome: usize },
    #[error("matrix is not lower-triangular with real diagonal at ({row}, {col})")]
    NotLowerTriangular { row: usize, col: usize },
    #[error("bad Cholesky vector length {len}: not a perfect square")]
    BadLength { len: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("no CNN width meets parameter budget {budget} within 5% (closest {closest})")]
    BudgetInfeasible { budget: usize, closest: usize },
    #[error("missing model: {0}")]
    MissingModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
