//! Subsystem index sets and the assume-guarantee restricted reachable sets.
//!
//! Subsystem `i` models the states `I_i = I_i^c ∪ I_i^o` and the controls `J_i`. Its
//! reachable-set over-approximation for a symbol `s_i ⊆ π_{I_i}(σᵏ)` and control `u_i` is
//! computed in two steps:
//!
//! * `rs_ag1`: the unobserved states `K_i` start in `π_{K_i}(σᵏ)` rather than anywhere in
//!   `X`, since the other subsystems keep them on the specification (first obligation). The
//!   unmodeled controls `L_i` range over their whole bounds.
//! * `rs_ag2`: the observed-but-uncontrolled states `I_i^o` are then clipped to
//!   `π_{I_i^o}(σᵏ⁺¹)` (second obligation). An empty clip marks the pair as invalid.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::dynamics::{DynamicsError, ReachEvaluator};
use crate::geometry::{GeometryError, GridPartition, IntervalBox, RefinedPartition, SymbolId};
use crate::specification::{CellSequence, SpecError};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("state dim {0} is controlled by more than one subsystem")]
    Overlap(usize),
    #[error("state dim {0} is controlled by no subsystem")]
    Uncovered(usize),
    #[error("control dim {0} is used by more than one subsystem")]
    ControlOverlap(usize),
    #[error("control dim {0} is used by no subsystem")]
    ControlUncovered(usize),
    #[error("subsystem {subsystem}: dim {dim} is both controlled and observed")]
    ControlledAndObserved { subsystem: usize, dim: usize },
    #[error("subsystem {subsystem}: index {index} out of range")]
    OutOfRange { subsystem: usize, index: usize },
    #[error("subsystem {0} controls no state")]
    Empty(usize),
}

/// Index sets of one subsystem. All indices are 0-based global dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemSpec {
    pub id: usize,
    /// `I_i^c`
    pub controlled: Vec<usize>,
    /// `I_i^o`
    pub observed: Vec<usize>,
    /// `J_i`
    pub controls: Vec<usize>,
}

impl SubsystemSpec {
    pub fn new(id: usize, controlled: &[usize], observed: &[usize], controls: &[usize]) -> Self {
        let sorted = |v: &[usize]| {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        };
        Self { id, controlled: sorted(controlled), observed: sorted(observed), controls: sorted(controls) }
    }

    /// `I_i`, sorted.
    pub fn modeled(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.controlled.iter().chain(&self.observed).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `K_i`: states not modeled by this subsystem.
    pub fn unobserved(&self, n: usize) -> Vec<usize> {
        let modeled = self.modeled();
        (0..n).filter(|d| modeled.binary_search(d).is_err()).collect()
    }

    /// `L_i`: controls acting as external inputs.
    pub fn external_controls(&self, p: usize) -> Vec<usize> {
        (0..p).filter(|d| self.controls.binary_search(d).is_err()).collect()
    }
}

/// Checks that the controlled sets partition the states and the control sets partition the inputs.
pub fn validate_decomposition(subsystems: &[SubsystemSpec], n: usize, p: usize) -> Result<(), DecompositionError> {
    let mut state_owner = vec![false; n];
    let mut control_owner = vec![false; p];
    for s in subsystems {
        if s.controlled.is_empty() {
            return Err(DecompositionError::Empty(s.id));
        }
        for &d in s.controlled.iter().chain(&s.observed) {
            if d >= n {
                return Err(DecompositionError::OutOfRange { subsystem: s.id, index: d });
            }
        }
        if let Some(&d) = s.controlled.iter().find(|d| s.observed.contains(d)) {
            return Err(DecompositionError::ControlledAndObserved { subsystem: s.id, dim: d });
        }
        for &d in &s.controlled {
            if std::mem::replace(&mut state_owner[d], true) {
                return Err(DecompositionError::Overlap(d));
            }
        }
        for &j in &s.controls {
            if j >= p {
                return Err(DecompositionError::OutOfRange { subsystem: s.id, index: j });
            }
            if std::mem::replace(&mut control_owner[j], true) {
                return Err(DecompositionError::ControlOverlap(j));
            }
        }
    }
    if let Some(d) = state_owner.iter().position(|&o| !o) {
        return Err(DecompositionError::Uncovered(d));
    }
    if let Some(j) = control_owner.iter().position(|&o| !o) {
        return Err(DecompositionError::ControlUncovered(j));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AbstractionError {
    #[error("symbol {symbol} is not inside the projection of step {step}")]
    SymbolOutsideCell { step: usize, symbol: SymbolId },
    #[error("step {step} has no successor step (horizon {horizon})")]
    NoSuccessor { step: usize, horizon: usize },
    #[error("control value {0} is out of range")]
    UnknownControl(usize),
    #[error("control value {index} lies outside the control bounds")]
    ControlOutsideBounds { index: usize },
    #[error("subsystem needs at least one control value")]
    NoControls,
    #[error("expected one partition of the subsystem's projected grid per step")]
    PartitionMismatch,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Finite abstraction of one subsystem.
///
/// Each specification step keeps its own refined partition of `π_{I_i}(X)`, so repeated
/// projected cells (`π_{I_i}(σᵏ) = π_{I_i}(σˡ)`) are refined independently and symbol sets
/// of different steps never interfere.
#[derive(Clone, Debug)]
pub struct SubsystemAbstraction<S> {
    spec: SubsystemSpec,
    modeled: Vec<usize>,
    base: GridPartition<S>,
    partitions: Vec<RefinedPartition<S>>,
    control_values: Vec<Vec<S>>,
    evaluator: Arc<ReachEvaluator<S>>,
    sequence: Arc<CellSequence<S>>,
}

impl<S: Scalar> SubsystemAbstraction<S> {
    /// `control_values` are points over `spec.controls`, tried in the given order.
    pub fn new(
        spec: SubsystemSpec,
        sequence: Arc<CellSequence<S>>,
        evaluator: Arc<ReachEvaluator<S>>,
        control_values: Vec<Vec<S>>,
        arity: usize,
    ) -> Result<Self, AbstractionError> {
        if control_values.is_empty() {
            return Err(AbstractionError::NoControls);
        }
        let ubox = evaluator.system().control_bounds().project(&spec.controls)?;
        for (index, u) in control_values.iter().enumerate() {
            if !ubox.contains_point(u) {
                return Err(AbstractionError::ControlOutsideBounds { index });
            }
        }
        let modeled = spec.modeled();
        let base = sequence.grid().project(&modeled)?;
        let part = RefinedPartition::new(base.clone(), arity)?;
        let partitions = vec![part; sequence.horizon() + 1];
        Ok(Self { spec, modeled, base, partitions, control_values, evaluator, sequence })
    }

    pub fn spec(&self) -> &SubsystemSpec {
        &self.spec
    }

    /// `I_i`.
    pub fn modeled(&self) -> &[usize] {
        &self.modeled
    }

    pub fn sequence(&self) -> &Arc<CellSequence<S>> {
        &self.sequence
    }

    pub fn evaluator(&self) -> &Arc<ReachEvaluator<S>> {
        &self.evaluator
    }

    pub fn base_grid(&self) -> &GridPartition<S> {
        &self.base
    }

    pub fn control_values(&self) -> &[Vec<S>] {
        &self.control_values
    }

    pub fn control(&self, index: usize) -> Result<&[S], AbstractionError> {
        self.control_values.get(index).map(Vec::as_slice).ok_or(AbstractionError::UnknownControl(index))
    }

    /// Refined partition used at step `k`.
    pub fn partition(&self, k: usize) -> &RefinedPartition<S> {
        &self.partitions[k]
    }

    pub fn partition_mut(&mut self, k: usize) -> &mut RefinedPartition<S> {
        &mut self.partitions[k]
    }

    pub fn partitions(&self) -> &[RefinedPartition<S>] {
        &self.partitions
    }

    /// Replaces the per-step partitions (used when re-importing synthesized artifacts).
    pub fn set_partitions(&mut self, partitions: Vec<RefinedPartition<S>>) -> Result<(), AbstractionError> {
        if partitions.len() != self.partitions.len() || partitions.iter().any(|p| p.base() != &self.base) {
            return Err(AbstractionError::PartitionMismatch);
        }
        self.partitions = partitions;
        Ok(())
    }

    /// Index of `π_{I_i}(σᵏ)` in the projected grid.
    pub fn projected_cell(&self, k: usize) -> Result<usize, AbstractionError> {
        Ok(self.sequence.grid().project_cell(self.sequence.cell(k)?, &self.base)?)
    }

    /// `P_i(σᵏ)`: leaves of step `k`'s partition inside `π_{I_i}(σᵏ)`.
    pub fn step_symbols(&self, k: usize) -> Result<Vec<SymbolId>, AbstractionError> {
        Ok(self.partitions[k].leaves_in_cell(self.projected_cell(k)?))
    }

    fn pinned_controls(&self, u: &[S]) -> Result<IntervalBox<S>, AbstractionError> {
        let pin = IntervalBox::point(self.spec.controls.clone(), u)?;
        Ok(self.evaluator.system().control_bounds().with_replaced(&pin)?)
    }

    /// Over-approximation from `σᵏ ∩ π_{I_i}⁻¹(s)` under `U ∩ π_{J_i}⁻¹(u)` (full state dims).
    pub fn rs_ag1(&self, s: &SymbolId, u: &[S], k: usize) -> Result<IntervalBox<S>, AbstractionError> {
        let cell = self.sequence.step_box(k)?;
        let sbox = self.partitions[k].symbol_box(s)?;
        if !sbox.is_subset_of(&cell.project(&self.modeled)?) {
            return Err(AbstractionError::SymbolOutsideCell { step: k, symbol: s.clone() });
        }
        let x0 = cell.with_replaced(&sbox)?;
        let controls = self.pinned_controls(u)?;
        Ok(self.evaluator.over_reach(&x0, &controls)?)
    }

    /// `rs_ag1` clipped on `I_i^o` to `π_{I_i^o}(σᵏ⁺¹)`; `None` when the clip is empty.
    pub fn rs_ag2(&self, s: &SymbolId, u: &[S], k: usize) -> Result<Option<IntervalBox<S>>, AbstractionError> {
        if k >= self.sequence.horizon() {
            return Err(AbstractionError::NoSuccessor { step: k, horizon: self.sequence.horizon() });
        }
        let reach = self.rs_ag1(s, u, k)?;
        self.clip_observed(reach, k + 1)
    }

    fn clip_observed(&self, reach: IntervalBox<S>, next: usize) -> Result<Option<IntervalBox<S>>, AbstractionError> {
        if self.spec.observed.is_empty() {
            return Ok(Some(reach));
        }
        let target = self.sequence.projected_step(next, &self.spec.observed)?;
        let current = reach.project(&self.spec.observed)?;
        Ok(current.intersect(&target).map(|clip| reach.with_replaced(&clip).expect("observed dims are state dims")))
    }

    /// Symbols of step `k + 1`'s partition meeting `π_{I_i}(rs_ag2(s, u, k))` (closed boxes).
    pub fn post(&self, s: &SymbolId, u: &[S], k: usize) -> Result<Vec<SymbolId>, AbstractionError> {
        match self.rs_ag2(s, u, k)? {
            None => Ok(Vec::new()),
            Some(reach) => {
                let proj = reach.project(&self.modeled)?;
                Ok(self.partitions[k + 1].leaves_meeting(&proj).into_iter().map(|(id, _)| id).collect())
            }
        }
    }

    /// Re-checks the second obligation for a pair: `π_{I_i^o}(rs_ag2) ⊆ π_{I_i^o}(σᵏ⁺¹)`.
    pub fn audit_observed_obligation(&self, s: &SymbolId, u: &[S], k: usize) -> Result<bool, AbstractionError> {
        match self.rs_ag2(s, u, k)? {
            None => Ok(true),
            Some(_) if self.spec.observed.is_empty() => Ok(true),
            Some(reach) => {
                let target = self.sequence.projected_step(k + 1, &self.spec.observed)?;
                Ok(reach.project(&self.spec.observed)?.is_subset_of(&target))
            }
        }
    }

    /// Validity condition of a pair against a region of step `k + 1`:
    /// `rs_ag2 ≠ ∅` and `π_{I_i}(rs_ag2) ⊆ ⋃ region`.
    pub fn pair_is_valid(
        &self,
        s: &SymbolId,
        u: &[S],
        k: usize,
        next_region: &BTreeSet<SymbolId>,
    ) -> Result<bool, AbstractionError> {
        Ok(match self.projected_reach(s, u, k)? {
            None => false,
            Some(reach) => self.partitions[k + 1].covered_by(&reach, next_region),
        })
    }

    /// `π_{I_i}(rs_ag2(s, u, k))`, the part of a transition that validity depends on.
    pub fn projected_reach(&self, s: &SymbolId, u: &[S], k: usize) -> Result<Option<IntervalBox<S>>, AbstractionError> {
        match self.rs_ag2(s, u, k)? {
            None => Ok(None),
            Some(reach) => Ok(Some(reach.project(&self.modeled)?)),
        }
    }
}

/// Every point of `values^count`, first coordinate varying fastest.
pub fn control_grid<S: Scalar>(count: usize, values: &[S]) -> Vec<Vec<S>> {
    let total = values.len().pow(count as u32);
    (0..total)
        .map(|mut index| {
            (0..count)
                .map(|_| {
                    let v = values[index % values.len()];
                    index /= values.len();
                    v
                })
                .collect()
        })
        .collect()
}

/// Everything needed to synthesize the local controllers of a decomposed system.
#[derive(Clone, Debug)]
pub struct Problem<S> {
    pub evaluator: Arc<ReachEvaluator<S>>,
    pub sequence: Arc<CellSequence<S>>,
    pub subsystems: Vec<SubsystemSpec>,
    /// Ordered control values of each subsystem, as points over its `J_i`.
    pub control_values: Vec<Vec<Vec<S>>>,
    /// Subsymbols per dimension created by one split.
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("{subsystems} subsystems but {lists} control lists")]
    ControlLists { subsystems: usize, lists: usize },
    #[error("specification grid does not cover the system's state bounds")]
    GridMismatch,
    #[error("subsystem {subsystem}: {source}")]
    Abstraction { subsystem: usize, source: AbstractionError },
}

impl<S: Scalar> Problem<S> {
    /// Cross-checks dimensions and builds one unrefined abstraction per subsystem.
    pub fn abstractions(&self) -> Result<Vec<SubsystemAbstraction<S>>, ProblemError> {
        let sys = self.evaluator.system();
        validate_decomposition(&self.subsystems, sys.n(), sys.p())?;
        if self.control_values.len() != self.subsystems.len() {
            return Err(ProblemError::ControlLists {
                subsystems: self.subsystems.len(),
                lists: self.control_values.len(),
            });
        }
        if self.sequence.grid().domain() != sys.state_bounds() {
            return Err(ProblemError::GridMismatch);
        }
        self.subsystems
            .iter()
            .zip(&self.control_values)
            .map(|(spec, values)| {
                SubsystemAbstraction::new(
                    spec.clone(),
                    self.sequence.clone(),
                    self.evaluator.clone(),
                    values.clone(),
                    self.arity,
                )
                .map_err(|source| ProblemError::Abstraction { subsystem: spec.id, source })
            })
            .collect()
    }
}
