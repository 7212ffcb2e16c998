//! Cell-sequence specifications: visit `σ⁰, σ¹, …, σʳ` at consecutive sampling times.

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{GeometryError, GridPartition, IntervalBox};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("a cell sequence needs at least two cells (horizon >= 1)")]
    TooShort,
    #[error("cell {0} is not a cell of the grid")]
    UnknownCell(usize),
    #[error("step {step} is outside 0..={horizon}")]
    StepOutOfRange { step: usize, horizon: usize },
    #[error("trace has {got} points, expected {expected}")]
    TraceLength { got: usize, expected: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Finite sequence of grid cells `(σ⁰, …, σʳ)`; duplicates are allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSequence<S> {
    grid: Arc<GridPartition<S>>,
    cells: Vec<usize>,
}

impl<S: Scalar> CellSequence<S> {
    pub fn new(grid: Arc<GridPartition<S>>, cells: Vec<usize>) -> Result<Self, SpecError> {
        if cells.len() < 2 {
            return Err(SpecError::TooShort);
        }
        if let Some(&c) = cells.iter().find(|&&c| c >= grid.cell_count()) {
            return Err(SpecError::UnknownCell(c));
        }
        Ok(Self { grid, cells })
    }

    /// Builds the sequence from per-dimension cell coordinates of each step.
    pub fn from_coords(grid: Arc<GridPartition<S>>, steps: &[Vec<usize>]) -> Result<Self, SpecError> {
        let cells = steps.iter().map(|c| grid.cell_index(c)).collect::<Result<Vec<_>, _>>()?;
        Self::new(grid, cells)
    }

    pub fn grid(&self) -> &Arc<GridPartition<S>> {
        &self.grid
    }

    /// `r`, the number of transitions.
    pub fn horizon(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    fn check_step(&self, k: usize) -> Result<(), SpecError> {
        if k > self.horizon() {
            return Err(SpecError::StepOutOfRange { step: k, horizon: self.horizon() });
        }
        Ok(())
    }

    pub fn cell(&self, k: usize) -> Result<usize, SpecError> {
        self.check_step(k)?;
        Ok(self.cells[k])
    }

    pub fn step_box(&self, k: usize) -> Result<IntervalBox<S>, SpecError> {
        Ok(self.grid.cell_box(self.cell(k)?))
    }

    /// `π_dims(σᵏ)`.
    pub fn projected_step(&self, k: usize, dims: &[usize]) -> Result<IntervalBox<S>, SpecError> {
        Ok(self.step_box(k)?.project(dims)?)
    }

    /// True iff `xᵏ ∈ σᵏ` for every step, using the half-open cell membership of the grid.
    pub fn check_trace(&self, trace: &[Vec<S>]) -> Result<bool, SpecError> {
        if trace.len() != self.cells.len() {
            return Err(SpecError::TraceLength { got: trace.len(), expected: self.cells.len() });
        }
        Ok(trace
            .iter()
            .zip(&self.cells)
            .all(|(x, &c)| self.grid.locate(x).map(|found| found == c).unwrap_or(false)))
    }

    /// First step whose point misses its cell, if any.
    pub fn first_violation(&self, trace: &[Vec<S>]) -> Option<usize> {
        trace
            .iter()
            .zip(&self.cells)
            .position(|(x, &c)| self.grid.locate(x).map(|found| found != c).unwrap_or(true))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_grid() -> Arc<GridPartition<f64>> {
        let dom = IntervalBox::from_bounds(vec![0.0, 0.0], vec![4.0, 4.0]).unwrap();
        Arc::new(GridPartition::uniform(dom, &[2, 2]).unwrap())
    }

    #[test]
    fn rejects_short_or_unknown() {
        let g = line_grid();
        assert_eq!(CellSequence::new(g.clone(), vec![0]), Err(SpecError::TooShort));
        assert_eq!(CellSequence::new(g, vec![0, 9]), Err(SpecError::UnknownCell(9)));
    }

    #[test]
    fn projected_steps() {
        let spec = CellSequence::from_coords(line_grid(), &[vec![1, 1], vec![0, 1], vec![0, 0]]).unwrap();
        assert_eq!(spec.horizon(), 2);
        let b = spec.projected_step(1, &[1]).unwrap();
        assert_eq!((b.low()[0], b.high()[0]), (2.0, 4.0));
        assert_eq!(spec.projected_step(2, &[0, 1]).unwrap(), spec.step_box(2).unwrap());
        assert!(matches!(spec.projected_step(3, &[0]), Err(SpecError::StepOutOfRange { .. })));
    }

    #[test]
    fn traces() {
        let spec = CellSequence::from_coords(line_grid(), &[vec![1, 1], vec![0, 1], vec![0, 0]]).unwrap();
        let centers: Vec<_> = (0..3).map(|k| spec.step_box(k).unwrap().center()).collect();
        assert!(spec.check_trace(&centers).unwrap());
        let mut bad = centers.clone();
        bad[1][0] = 3.0;
        assert!(!spec.check_trace(&bad).unwrap());
        assert_eq!(spec.first_violation(&bad), Some(1));
        assert!(spec.check_trace(&centers[..2]).is_err());
    }
}
