use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeaError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid composite structure: {0}")]
    InvalidStructure(String),
    #[error("operator is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("positivity blow-up: eigenvalue {eigenvalue:.3e} below -{clip_tol:.1e}")]
    PositivityBlowUp { eigenvalue: f64, clip_tol: f64 },
    #[error("trace deviation {deviation:.3e} exceeds {limit:.1e}")]
    TraceDeviation { deviation: f64, limit: f64 },
    #[error("eigendecomposition did not converge (dim {dim}, Frobenius norm {norm:.3e})")]
    EigenFailure { dim: usize, norm: f64 },
    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("degenerate Hamiltonian perception: (H,H) = {variance:.3e}")]
    DegenerateHamiltonian { variance: f64 },
    #[error("step size underflow at t = {t}: dt = {dt:.3e}")]
    StepSizeUnderflow { t: f64, dt: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("operator is not unitary (residual {residual:.3e})")]
    NonUnitary { residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

pub type Result<T, E = SeaError> = std::result::Result<T, E>;
