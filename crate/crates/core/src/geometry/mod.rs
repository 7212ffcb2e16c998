//! Boxes, grid partitions and hierarchically refined symbol partitions.

mod boxes;
mod grid;
mod partition;

pub use boxes::IntervalBox;
pub use grid::GridPartition;
pub use partition::{RefinedPartition, SymbolId};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension list has {dims} entries but bounds have {low}/{high}")]
    LengthMismatch { dims: usize, low: usize, high: usize },
    #[error("dimensions must be strictly increasing: {0:?}")]
    UnsortedDims(Vec<usize>),
    #[error("inverted bounds on dim {dim}: [{low}, {high}]")]
    InvertedBounds { dim: usize, low: f64, high: f64 },
    #[error("dimension {0} is not part of the box")]
    NotASubset(usize),
    #[error("dimension {0} appears in both factors of a product")]
    SharedDim(usize),
    #[error("cut points on dim {0} must be sorted and strictly inside the domain")]
    BadCuts(usize),
    #[error("cell coordinates {0:?} are outside the grid")]
    BadCell(Vec<usize>),
    #[error("point lies outside the partition domain")]
    OutOfDomain,
    #[error("split arity {0} is not supported")]
    BadArity(usize),
    #[error("symbol {0} is not a leaf")]
    NotALeaf(SymbolId),
    #[error("symbol {0} does not belong to the partition")]
    UnknownSymbol(SymbolId),
}
