//! Composition of the subsystem abstractions.
//!
//! `cap` builds the coarsest common refinement of partitions living on possibly overlapping
//! dimension sets. It is only materialized for small instances; the global controller never
//! builds the composed partition and looks up each subsystem's symbol (`d_i`) directly.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::decomposition::{AbstractionError, SubsystemAbstraction};
use crate::dynamics::{uniform_point, Disturbance, DynamicsError};
use crate::geometry::{GeometryError, IntervalBox, RefinedPartition, SymbolId};
use crate::refinement::{LocalController, RefinementResult, ValidTable};
use crate::specification::SpecError;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("partitions disagree on the domain of shared dim {0}")]
    DomainMismatch(usize),
    #[error("no control defined for subsystem {subsystem} at step {step}")]
    Undefined { subsystem: usize, step: usize },
    #[error("step {step} is outside the controller horizon {horizon}")]
    BadStep { step: usize, horizon: usize },
    #[error("components disagree: {0}")]
    Inconsistent(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Explicit composed partition over the union of its members' dims.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedPartition<S> {
    dims: Vec<usize>,
    domain: IntervalBox<S>,
    cells: Vec<IntervalBox<S>>,
}

impl<S: Scalar> ComposedPartition<S> {
    /// The leaves of a single refined partition.
    pub fn from_partition(p: &RefinedPartition<S>) -> Result<Self, CompositionError> {
        let cells = p.leaves().iter().map(|s| p.symbol_box(s)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { dims: p.dims().to_vec(), domain: p.domain().clone(), cells })
    }

    /// Wraps an explicit list of boxes partitioning `domain` (not checked).
    pub fn from_cells(domain: IntervalBox<S>, cells: Vec<IntervalBox<S>>) -> Self {
        Self { dims: domain.dims().to_vec(), domain, cells }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn domain(&self) -> &IntervalBox<S> {
        &self.domain
    }

    pub fn cells(&self) -> &[IntervalBox<S>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `self ⋒ other`.
    ///
    /// For two box partitions the maximal boxes whose projections fit inside one cell of each
    /// member are exactly the positive-volume intersections of the members' cylinder sets; on
    /// disjoint dims this is the Cartesian product.
    pub fn cap(&self, other: &Self) -> Result<Self, CompositionError> {
        for &d in self.dims.iter().filter(|d| other.dims.contains(d)) {
            if self.domain.bounds(d) != other.domain.bounds(d) {
                return Err(CompositionError::DomainMismatch(d));
            }
        }
        let domain = cylinder_meet(&self.domain, &other.domain).ok_or(CompositionError::Inconsistent("domains"))?;
        let cells = self
            .cells
            .par_iter()
            .flat_map_iter(|a| other.cells.iter().filter_map(move |b| cylinder_meet(a, b)))
            .filter(|c| (0..c.dim_count()).all(|p| c.width(p) > S::zero()))
            .collect();
        Ok(Self { dims: domain.dims().to_vec(), domain, cells })
    }

    /// Index of the cell containing `x` (half-open on interior faces).
    pub fn locate(&self, x: &[S]) -> Option<usize> {
        let top = self.domain.high();
        self.cells.iter().position(|c| {
            (0..x.len()).all(|p| c.low()[p] <= x[p] && (x[p] < c.high()[p] || (x[p] == c.high()[p] && x[p] == top[p])))
        })
    }
}

/// `⋒` folded over several partitions.
pub fn cap_all<S: Scalar>(parts: &[ComposedPartition<S>]) -> Result<ComposedPartition<S>, CompositionError> {
    let (first, rest) = parts.split_first().ok_or(CompositionError::Inconsistent("nothing to compose"))?;
    rest.iter().try_fold(first.clone(), |acc, p| acc.cap(p))
}

/// Intersection of the cylinders spanned by `a` and `b` over the union of their dims.
fn cylinder_meet<S: Scalar>(a: &IntervalBox<S>, b: &IntervalBox<S>) -> Option<IntervalBox<S>> {
    let mut dims: Vec<usize> = a.dims().iter().chain(b.dims()).copied().collect();
    dims.sort_unstable();
    dims.dedup();
    let mut low = Vec::with_capacity(dims.len());
    let mut high = Vec::with_capacity(dims.len());
    for &d in &dims {
        let (l, h) = match (a.bounds(d), b.bounds(d)) {
            (Some((al, ah)), Some((bl, bh))) => (al.max(bl), ah.min(bh)),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!(),
        };
        if l > h {
            return None;
        }
        low.push(l);
        high.push(h);
    }
    IntervalBox::new(dims, low, high).ok()
}

/// A synthesized subsystem: its refined abstraction, valid sets and local controller.
#[derive(Clone, Debug)]
pub struct Component<S> {
    pub abstraction: SubsystemAbstraction<S>,
    pub valid: ValidTable,
    pub controller: LocalController<S>,
}

impl<S: Scalar> From<RefinementResult<S>> for Component<S> {
    fn from(r: RefinementResult<S>) -> Self {
        Self { abstraction: r.abstraction, valid: r.valid, controller: r.controller }
    }
}

impl<S: Scalar> Component<S> {
    /// `d_i(x)` at step `k`: the leaf of step `k`'s partition containing `π_{I_i}(x)`.
    pub fn decompose(&self, x: &[S], k: usize) -> Result<SymbolId, CompositionError> {
        let xi: Vec<S> = self.abstraction.modeled().iter().map(|&d| x[d]).collect();
        Ok(self.abstraction.partition(k).locate(&xi)?)
    }
}

/// Composed state-feedback controller `x ↦ (C_1(k, d_1(x)), …, C_m(k, d_m(x)))`.
#[derive(Clone, Debug)]
pub struct GlobalController<S> {
    components: Vec<Component<S>>,
    n: usize,
    p: usize,
    horizon: usize,
}

/// Per-step closed-loop outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedLoopTrace<S> {
    /// `x⁰ … xᵏ`, stopping early at the first failure.
    pub states: Vec<Vec<S>>,
    pub controls: Vec<Vec<S>>,
    pub satisfied: bool,
    /// Step at which the trace left the specification or the controller was undefined.
    pub failure: Option<TraceFailure>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceFailure {
    OutsideSpec { step: usize },
    Undefined { step: usize, subsystem: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeedbackReport {
    pub samples: usize,
    /// Draws discarded because some `d_i(x)` was not valid.
    pub rejected: usize,
    pub violations: usize,
    /// The first few violating transitions.
    pub examples: Vec<FeedbackViolation>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackViolation {
    pub step: usize,
    pub subsystem: Option<usize>,
    pub x: Vec<f64>,
    /// Empty when no control was defined at `x`.
    pub next: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NonblockingReport {
    pub checked: usize,
    /// `(subsystem, step, symbol)` of valid symbols without a control that keeps them valid.
    pub blocking: Vec<(usize, usize, SymbolId)>,
}

impl NonblockingReport {
    pub fn passed(&self) -> bool {
        self.blocking.is_empty()
    }
}

const MAX_EXAMPLES: usize = 8;

impl<S: Scalar> GlobalController<S> {
    pub fn new(components: Vec<Component<S>>) -> Result<Self, CompositionError> {
        let first = components.first().ok_or(CompositionError::Inconsistent("no components"))?;
        let sys = first.abstraction.evaluator().system().clone();
        let seq = first.abstraction.sequence().clone();
        for c in &components {
            if c.abstraction.sequence().cells() != seq.cells() {
                return Err(CompositionError::Inconsistent("specification"));
            }
            if c.abstraction.evaluator().system().n() != sys.n() || c.abstraction.evaluator().system().p() != sys.p() {
                return Err(CompositionError::Inconsistent("system dimensions"));
            }
            if c.valid.horizon() != seq.horizon() {
                return Err(CompositionError::Inconsistent("valid table horizon"));
            }
        }
        Ok(Self { n: sys.n(), p: sys.p(), horizon: seq.horizon(), components })
    }

    pub fn from_results(results: Vec<RefinementResult<S>>) -> Result<Self, CompositionError> {
        Self::new(results.into_iter().map(Component::from).collect())
    }

    pub fn components(&self) -> &[Component<S>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Component<S>] {
        &mut self.components
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    fn first(&self) -> &SubsystemAbstraction<S> {
        &self.components[0].abstraction
    }

    /// `d_i(x)` for every subsystem at step `k`.
    pub fn decompose(&self, x: &[S], k: usize) -> Result<Vec<SymbolId>, CompositionError> {
        self.components.iter().map(|c| c.decompose(x, k)).collect()
    }

    /// True when every `d_i(x)` is a valid symbol of step `k`.
    pub fn is_valid(&self, x: &[S], k: usize) -> bool {
        self.components.iter().all(|c| c.decompose(x, k).map(|s| c.valid.step(k).contains(&s)).unwrap_or(false))
    }

    /// Global control at step `k < r`; `Undefined` names the first subsystem without an entry.
    pub fn control(&self, x: &[S], k: usize) -> Result<Vec<S>, CompositionError> {
        if k >= self.horizon {
            return Err(CompositionError::BadStep { step: k, horizon: self.horizon });
        }
        let mut u = vec![S::zero(); self.p];
        for c in &self.components {
            let undefined = CompositionError::Undefined { subsystem: c.controller.subsystem(), step: k };
            let s = c.decompose(x, k).map_err(|_| undefined.clone())?;
            let ui = c.controller.get(k, &s).ok_or(undefined)?;
            for (&j, &v) in c.controller.control_dims().iter().zip(ui) {
                u[j] = v;
            }
        }
        Ok(u)
    }

    /// Uniform draw over `σᵏ` restricted to states valid for every subsystem, built from
    /// random valid symbols of each subsystem's controlled dims; `None` after `attempts` misses.
    pub fn sample_valid_state<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, attempts: usize) -> Option<(Vec<S>, usize)> {
        let pools: Vec<Vec<IntervalBox<S>>> = self
            .components
            .iter()
            .map(|c| {
                let part = c.abstraction.partition(k);
                let dims = &c.abstraction.spec().controlled;
                c.valid.step(k).iter().filter_map(|s| part.symbol_box(s).ok()?.project(dims).ok()).collect()
            })
            .collect();
        if pools.iter().any(Vec::is_empty) {
            return None;
        }
        for attempt in 0..attempts {
            let mut x = vec![S::zero(); self.n];
            for pool in &pools {
                let b = &pool[rng.random_range(0..pool.len())];
                for (d, v) in b.dims().iter().zip(uniform_point(rng, b)) {
                    x[*d] = v;
                }
            }
            if self.is_valid(&x, k) {
                return Some((x, attempt));
            }
        }
        None
    }

    /// Closed-loop run from `x0` over the whole horizon with a fresh random disturbance per step.
    pub fn run_closed_loop<R: Rng + ?Sized>(&self, x0: &[S], rng: &mut R) -> Result<ClosedLoopTrace<S>, CompositionError> {
        let seq = self.first().sequence().clone();
        let eval = self.first().evaluator().clone();
        let mut trace = ClosedLoopTrace { states: vec![x0.to_vec()], controls: Vec::new(), satisfied: true, failure: None };
        for k in 0..=self.horizon {
            let x = trace.states[k].clone();
            if !seq.step_box(k)?.contains_point(&x) {
                trace.satisfied = false;
                trace.failure = Some(TraceFailure::OutsideSpec { step: k });
                break;
            }
            if k == self.horizon {
                break;
            }
            let u = match self.control(&x, k) {
                Ok(u) => u,
                Err(CompositionError::Undefined { subsystem, step }) => {
                    trace.satisfied = false;
                    trace.failure = Some(TraceFailure::Undefined { step, subsystem });
                    break;
                }
                Err(e) => return Err(e),
            };
            let ws = eval.random_disturbance(rng);
            let next = eval.integrate(&x, &u, Disturbance::PerStep(&ws))?;
            trace.controls.push(u);
            trace.states.push(next);
        }
        Ok(trace)
    }

    /// Samples `(k, x)` with every `d_i(x)` valid, applies the global control under a random
    /// disturbance and checks that each `d_i(x')` is an abstract successor of `d_i(x)` and that
    /// `x' ∈ σᵏ⁺¹`.
    pub fn check_feedback_refinement<R: Rng + ?Sized>(
        &self,
        samples: usize,
        rng: &mut R,
    ) -> Result<FeedbackReport, CompositionError> {
        let seq = self.first().sequence().clone();
        let eval = self.first().evaluator().clone();
        let mut report = FeedbackReport::default();
        if self.horizon == 0 {
            return Ok(report);
        }
        for _ in 0..samples {
            let k = rng.random_range(0..self.horizon);
            let Some((x, misses)) = self.sample_valid_state(k, rng, 10_000) else {
                report.rejected += 10_000;
                continue;
            };
            report.rejected += misses;
            report.samples += 1;
            let u = match self.control(&x, k) {
                Ok(u) => u,
                Err(CompositionError::Undefined { subsystem, .. }) => {
                    report.violations += 1;
                    if report.examples.len() < MAX_EXAMPLES {
                        let x = x.iter().map(|v| v.as_f64()).collect();
                        report.examples.push(FeedbackViolation { step: k, subsystem: Some(subsystem), x, next: Vec::new() });
                    }
                    continue;
                }
                Err(e) => return Err(e),
            };
            let ws = eval.random_disturbance(rng);
            let next = eval.integrate(&x, &u, Disturbance::PerStep(&ws))?;
            let mut failed: Option<Option<usize>> = None;
            if !seq.step_box(k + 1)?.contains_point(&next) {
                failed = Some(None);
            }
            for c in &self.components {
                if failed.is_some() {
                    break;
                }
                let s = c.decompose(&x, k)?;
                let ui: Vec<S> = c.controller.control_dims().iter().map(|&j| u[j]).collect();
                let succ = c.abstraction.post(&s, &ui, k)?;
                let landed = c.decompose(&next, k + 1)?;
                if !succ.contains(&landed) {
                    failed = Some(Some(c.controller.subsystem()));
                }
            }
            if let Some(subsystem) = failed {
                report.violations += 1;
                if report.examples.len() < MAX_EXAMPLES {
                    report.examples.push(FeedbackViolation {
                        step: k,
                        subsystem,
                        x: x.iter().map(|v| v.as_f64()).collect(),
                        next: next.iter().map(|v| v.as_f64()).collect(),
                    });
                }
            }
        }
        Ok(report)
    }

    /// Every valid symbol of every step `k < r` must have a controller entry whose abstract
    /// successor set is non-empty and lies in the valid set of step `k + 1`, so the abstract
    /// closed loop never reaches a symbol without a control.
    pub fn check_nonblocking(&self) -> Result<NonblockingReport, CompositionError> {
        let mut report = NonblockingReport::default();
        for c in &self.components {
            let id = c.controller.subsystem();
            for k in 0..self.horizon {
                let valid: Vec<&SymbolId> = c.valid.step(k).iter().collect();
                let blocked: Vec<Option<SymbolId>> = valid
                    .par_iter()
                    .map(|&s| -> Result<Option<SymbolId>, CompositionError> {
                        let Some(u) = c.controller.get(k, s) else {
                            return Ok(Some(s.clone()));
                        };
                        let stuck = c.abstraction.post(s, u, k)?.is_empty()
                            || !c.abstraction.pair_is_valid(s, u, k, c.valid.step(k + 1))?;
                        Ok(stuck.then(|| s.clone()))
                    })
                    .collect::<Result<_, _>>()?;
                report.checked += valid.len();
                report.blocking.extend(blocked.into_iter().flatten().map(|s| (id, k, s)));
            }
        }
        Ok(report)
    }

    /// Valid symbols of subsystem `i` at step `k`.
    pub fn valid_symbols(&self, i: usize, k: usize) -> &BTreeSet<SymbolId> {
        self.components[i].valid.step(k)
    }
}
