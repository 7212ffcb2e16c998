//! Compositional, specification-guided abstraction refinement for sampled nonlinear systems.
//!
//! The dynamics are split into subsystems that each model a subset of the states. Every
//! subsystem refines its own partition backwards along a cell-sequence specification until a
//! local controller exists, using assume-guarantee restricted reachable-set over-approximations.
//! The local controllers are then composed into a global state-feedback controller.
//!
//! All numeric types are generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases at the
//! crate root fix the scalar to `f64`, which is what the CLI and benchmark use.

pub mod composition;
pub mod decomposition;
pub mod dynamics;
pub mod geometry;
pub mod refinement;
mod scalar;
pub mod specification;
pub mod ufad;

pub use scalar::Scalar;

pub use composition::{ComposedPartition, GlobalController};
pub use decomposition::{SubsystemAbstraction, SubsystemSpec};
pub use dynamics::{ControlSystem, ReachEvaluator};
pub use geometry::{GridPartition, IntervalBox, RefinedPartition, SymbolId};
pub use refinement::{LocalController, RefineOptions, RefinementResult, ValidTable};
pub use specification::CellSequence;

pub type IntervalBox64 = IntervalBox<f64>;
pub type GridPartition64 = GridPartition<f64>;
pub type RefinedPartition64 = RefinedPartition<f64>;
pub type ControlSystem64 = ControlSystem<f64>;
pub type ReachEvaluator64 = ReachEvaluator<f64>;
pub type CellSequence64 = CellSequence<f64>;
pub type SubsystemAbstraction64 = SubsystemAbstraction<f64>;
pub type LocalController64 = LocalController<f64>;
pub type GlobalController64 = GlobalController<f64>;
pub type RefinementResult64 = RefinementResult<f64>;

pub type IntervalBox32 = IntervalBox<f32>;
pub type ControlSystem32 = ControlSystem<f32>;
pub type ReachEvaluator32 = ReachEvaluator<f32>;
