use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("gradient vanishes (norm {norm:e}); point is singular")]
    ZeroGradient { norm: f64 },
    #[error("planes are orthogonal (|<u1,u2>| = {overlap:e}); projection degenerates")]
    OrthogonalPlanes { overlap: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("sampling stalled: accepted {accepted} of {attempts} attempts")]
    SamplingStalled { accepted: usize, attempts: usize },
    #[error("point lies on the branch locus (|x| = {abs_x:e})")]
    OnBranchLocus { abs_x: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("argument of x is undefined at x = 0 with u != 0")]
    UndefinedArgument,
    #[error("point is off the surface (residual {residual:e})")]
    OffSurface { residual: f64 },
    #[error("graph disconnected: basepoint component has {size} of {total} vertices")]
    DisconnectedGraph { size: usize, total: usize },
    #[error("vertex {to} unreachable from {from}")]
    Unreachable { from: usize, to: usize },
    #[error("no sign change of d1 - d2 along the path")]
    NoSignChange,
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
