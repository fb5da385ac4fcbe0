//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(&'static str),
    #[error("point ({x}, {y}) is not inside the mesh")]
    NotInDomain { x: f64, y: f64 },
    #[error("invalid material: {0}")]
    InvalidMaterial(&'static str),
    #[error("singular system: mesh has no clamped (GammaD) boundary edge")]
    SingularSystem,
    #[error("linear solve failed: {iterations} iterations, relative residual {residual:e}")]
    SolveFailed { iterations: usize, residual: f64 },
    #[error("invalid direction: tangent must have unit length")]
    InvalidDirection,
    #[error("segment scan needs at least two candidate points")]
    InsufficientCandidates,
    #[error("volume functional requires a level set")]
    MissingLevelSet,
    #[error("invalid segment: {0}")]
    InvalidSegment(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
