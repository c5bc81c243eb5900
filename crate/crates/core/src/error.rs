use crate::linalg::Vec2;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("mesh needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("expected {expected} values, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("element {element} has zero length")]
    DegenerateElement { element: usize },
    #[error("the zero vector is not an admissible direction")]
    ZeroDirection,
    #[error("point ({}, {}) lies outside the metric's domain", .point.x, .point.y)]
    OutsideDomain { point: Vec2 },
    #[error("node {node} left the domain at ({}, {})", .point.x, .point.y)]
    NodeOutsideDomain { node: usize, point: Vec2 },
    #[error("{0}")]
    InvalidParameter(&'static str),
    #[error("singular pivot block at row {row}")]
    SingularSystem { row: usize },
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("time {0} is at or beyond the extinction time of the exact solution")]
    PastExtinction(f64),
    #[error("non-positive error {0:e} cannot enter a convergence order")]
    NonPositiveError(f64),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: alloc::boxed::Box::new(self),
        }
    }

    /// The innermost error, unwrapping step annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}
