use thiserror::Error;

use crate::sphere::Direction;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least {needed} points in dimension {dim}, got {got}")]
    TooFewPoints { dim: usize, needed: usize, got: usize },

    #[error("point set does not span R^{dim} (affine rank {rank})")]
    NotFullDimensional { dim: usize, rank: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hyperplane misses the polytope")]
    EmptySection,

    #[error("cannot drop coordinate {axis}: normal component {component:e} is below tolerance")]
    DegenerateProjection { axis: usize, component: f64 },

    #[error("direction too close to the chart boundary (|u_{axis}| = {component:e})")]
    PoleTooClose { axis: usize, component: f64 },

    #[error("point is not strictly interior to the body")]
    NotInterior,

    #[error("refinement did not converge (residual {residual:e})")]
    NoConvergence { last: Direction, residual: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("endpoints are not local maxima of the field")]
    NotLocalMaxima,

    #[error("dimension {0} is too small (need n >= 3)")]
    DimensionTooSmall(usize),

    #[error("invalid body parameters: {0}")]
    InvalidParams(String),

    #[error("point is not on the unit sphere (norm {0})")]
    OffSphere(f64),

    #[error("field is undefined at the origin")]
    OriginUndefined,

    #[error("empty input list")]
    EmptyList,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
