#![allow(dead_code)]

use std::sync::Arc;

use compref::decomposition::{control_grid, Problem};
use compref::dynamics::{Affine, TimeModel};
use compref::{CellSequence, GridPartition, IntervalBox, ReachEvaluator, SubsystemSpec};

pub fn bx(lo: &[f64], hi: &[f64]) -> IntervalBox<f64> {
    IntervalBox::from_bounds(lo.to_vec(), hi.to_vec()).unwrap()
}

/// `x⁺ = x + b·u` on `X = [0, 4]` with two cells and `σ = [0,2] → [2,4]`, `U = {1, 2.5}`.
pub fn shift_problem(b: f64) -> Problem<f64> {
    let sys = Affine { a: vec![vec![1.0]], b: vec![vec![b]], e: vec![vec![0.0]], c: vec![0.0] }
        .into_system(TimeModel::Discrete, bx(&[0.0], &[4.0]), bx(&[0.0], &[3.0]), bx(&[0.0], &[0.0]))
        .unwrap();
    let grid = Arc::new(GridPartition::uniform(bx(&[0.0], &[4.0]), &[2]).unwrap());
    Problem {
        evaluator: Arc::new(ReachEvaluator::new(Arc::new(sys), 1.0, 1)),
        sequence: Arc::new(CellSequence::new(grid, vec![0, 1]).unwrap()),
        subsystems: vec![SubsystemSpec::new(0, &[0], &[], &[0])],
        control_values: vec![vec![vec![1.0], vec![2.5]]],
        arity: 2,
    }
}

/// Two coupled discrete-time states
/// `x₁⁺ = 0.6x₁ + 0.2x₂ + u₁ + w₁`, `x₂⁺ = 0.2x₁ + 0.6x₂ + u₂ + w₂` on `[0,4]²` (4×4 grid),
/// `w ∈ [0, 0.3]²`, `u_i ∈ {−0.9, −0.6, −0.3, 0}`, specification cells (3,3) → (2,2) → (1,1).
///
/// Subsystem 0 controls `x₁` and observes `x₂`; subsystem 1 controls `x₂` alone.
pub fn planar_problem() -> Problem<f64> {
    let sys = Affine {
        a: vec![vec![0.6, 0.2], vec![0.2, 0.6]],
        b: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        e: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        c: vec![0.0, 0.0],
    }
    .into_system(TimeModel::Discrete, bx(&[0.0, 0.0], &[4.0, 4.0]), bx(&[-1.0, -1.0], &[0.0, 0.0]), bx(&[0.0, 0.0], &[0.3, 0.3]))
    .unwrap();
    let grid = Arc::new(GridPartition::uniform(bx(&[0.0, 0.0], &[4.0, 4.0]), &[4, 4]).unwrap());
    let sequence = CellSequence::from_coords(grid, &[vec![3, 3], vec![2, 2], vec![1, 1]]).unwrap();
    let levels = [-0.9, -0.6, -0.3, 0.0];
    Problem {
        evaluator: Arc::new(ReachEvaluator::new(Arc::new(sys), 1.0, 1)),
        sequence: Arc::new(sequence),
        subsystems: vec![SubsystemSpec::new(0, &[0], &[1], &[0]), SubsystemSpec::new(1, &[1], &[], &[1])],
        control_values: vec![control_grid(1, &levels), control_grid(1, &levels)],
        arity: 2,
    }
}
