//! Box discretization of a compact phase-space region and sampled box-transition graphs.

mod boxset;
mod graph;
mod grid;
mod semimetric;

pub use boxset::BoxSet;
pub use graph::{Digraph, EdgeInfo, EscapeRecord, EscapeReport, GraphParams, Sample, TransitionGraph, Witness};
pub use grid::{unit_pattern, BoxGrid, FACE_TOLERANCE};
pub use semimetric::{hausdorff_semimetric, ClosedCover, Cover, Semimetric};

use thiserror::Error;

use crate::systems::SystemError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point has dimension {got}, grid has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point {point:?} is outside the domain")]
    OutsideDomain { point: Vec<f64> },
    #[error(
        "domain is not absorbing: escape fraction {fraction:.3e} exceeds {tolerance:.3e} (first escape: {example})"
    )]
    DomainNotAbsorbing { fraction: f64, tolerance: f64, example: String },
    #[error("distance to or from an empty set is undefined")]
    EmptySet,
    #[error(transparent)]
    System(#[from] SystemError),
}
