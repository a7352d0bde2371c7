use thiserror::Error;

/// Errors raised by the numerical pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("radius must be positive (got {0}); use the origin series at r = 0")]
    OriginRadius(f64),

    #[error("integration diverged at r = {radius:.6e}")]
    Divergence { radius: f64 },

    #[error("singular Jacobian at Newton iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("Newton stalled after {iterations} iterations (residual {residual:.3e})")]
    NewtonStalled { iterations: usize, residual: f64 },

    #[error("Picard iteration did not contract within {iterations} iterations (last update {update:.3e})")]
    NonContraction { iterations: usize, update: f64 },

    #[error("trivial solution where a nontrivial one is required")]
    TrivialSolution,

    #[error("insufficient norm growth along branch: factor {factor:.3e} < {required:.3e}")]
    InsufficientGrowth { factor: f64, required: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("integrability failure: {0}")]
    Integrability(String),

    #[error("uniqueness violated: {count} distinct nontrivial solutions")]
    UniquenessViolated { count: usize },

    #[error("crossings out of schedule: {0}")]
    ScheduleViolation(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
