use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported degree {0}")]
    UnsupportedDegree(usize),

    #[error("expected 3 or 6 control points, got {0}")]
    ControlPointCount(usize),

    #[error("degenerate Jacobian at ({x1}, {x2}): |n| = {norm:e}")]
    DegenerateJacobian { x1: f64, x2: f64, norm: f64 },

    #[error("degenerate triangle")]
    DegenerateTriangle,

    #[error("evaluation point coincides with a vertex")]
    VertexCoincidence,

    #[error("closest-point projection did not converge after {iterations} iterations (|grad| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("ambiguous projection: ({}, {}) and ({}, {}) are equidistant", first[0], first[1], second[0], second[1])]
    AmbiguousProjection { first: [f64; 2], second: [f64; 2] },

    #[error("quadrature order must be at least {min}, got {got}")]
    QuadratureOrder { min: usize, got: usize },

    #[error("no reference value available")]
    ReferenceMissing,

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
