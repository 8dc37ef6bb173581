//! Concrete monoids, ε-families and distance spaces.

mod entourage;
mod grid;
mod power;
mod real_line;
mod reals;

pub use entourage::{
    entourage_distance, verify_entourage_metric, EntourageBase, EntourageFamily, EntourageMonoid,
    EntourageSpace, Relation, MAX_GROUND_SET,
};
pub use grid::{GridFamily, GridFunctionMonoid};
pub use power::{PowerFamily, PowerMonoid, VectorMonoid};
pub use real_line::{example3_distances, RealDistance, RealLine};
pub use reals::{Dyadic, Reals};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("grid has no nodes")]
    EmptyGrid,
    #[error("grid function has {found} values, grid has {expected} nodes")]
    GridMismatch { expected: usize, found: usize },
    #[error("ground set is empty")]
    EmptyGroundSet,
    #[error("ground set of size {size} exceeds the supported maximum of 64")]
    GroundSetTooLarge { size: usize },
    #[error("entourage base is empty")]
    EmptyBase,
    #[error("row {row} has {found} entries, expected {expected}")]
    NotSquare {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("entry ({row}, {col}) is {value}, expected 0 or 1")]
    NotBoolean { row: usize, col: usize, value: u8 },
    #[error("base relation {index} does not contain the diagonal")]
    MissingDiagonal { index: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("base is not separating: its intersection is larger than the diagonal")]
    NotSeparating,
    #[error("point {point} outside ground set of size {size}")]
    PointOutOfRange { point: usize, size: usize },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
}
