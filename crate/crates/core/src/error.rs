use alloc::boxed::Box;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    #[error("integration produced a non-finite state")]
    IntegrationFailure,

    #[error("not an equilibrium: discrete residual {residual:e}")]
    EquilibriumResidual { residual: f64 },

    #[error("riccati iteration did not converge after {iterations} iterations (last change {change:e})")]
    NoConvergence { iterations: usize, change: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qp solver hit the iteration cap ({iterations}) with kkt residual {residual:e}")]
    SolverMaxIterations {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("lift-off breaks overlap or are out of order")]
    OverlappingBreaks,

    #[error("path has no velocities")]
    MissingVelocities,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
