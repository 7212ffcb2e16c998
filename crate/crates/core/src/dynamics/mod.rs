//! Monotone control systems, fixed-step integration and reachable-set over-approximation.
//!
//! Over-approximations use the two extremal corner trajectories of a monotone system. The
//! flow is approximated with fixed-step RK4 and no rigorous error enclosure is added, so the
//! soundness of the boxes rests on the integrator error being negligible against the box
//! widths; the sampled soundness tests check this empirically.

mod affine;
mod reach;
mod system;

pub use affine::Affine;
pub use reach::{integrate, Disturbance, ReachEvaluator};
pub use system::{
    uniform_point, Argument, ControlSystem, Monotonicity, Sign, TimeModel, VectorField, MONOTONICITY_SAMPLES,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("declared sign violated: d f_{output} / d {argument}_{coordinate} = {derivative:e}")]
    Monotonicity { argument: Argument, coordinate: usize, output: usize, derivative: f64 },
    #[error("state coordinate {0}: decreasing state couplings are not supported")]
    UnsupportedStateSign(usize),
    #[error("vector field returned a non-finite value")]
    NonFinite,
    #[error("trajectory left the guard box on dim {dim} (value {value})")]
    Diverged { dim: usize, value: f64 },
    #[error("{0} is not contained in the system bounds")]
    OutsideBounds(&'static str),
}
