//! Specification-guided refinement of one subsystem's abstraction.
//!
//! Steps are processed backwards from `σʳ`. For each step the valid symbols are those with a
//! control whose restricted reach set is non-empty and lands inside the next step's valid
//! region. When a step has no valid symbol, queued steps are refined (their invalid symbols
//! split) and the valid sets are recomputed from the refined step down to the current one.

mod queue;

pub use queue::{QueueEntry, RefineQueue};

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use thiserror::Error;
use tracing::{debug, info};

use crate::decomposition::{AbstractionError, SubsystemAbstraction};
use crate::dynamics::Sign;
use crate::geometry::{IntervalBox, RefinedPartition, SymbolId};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("subsystem {subsystem}: step {step} (cell {cell}) has no valid symbol and no step can be refined further (depth {depth})")]
    Unrealizable { subsystem: usize, step: usize, cell: usize, depth: usize },
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefineOptions {
    /// Maximum number of refinements of any one step.
    pub max_depth: usize,
    /// Record every satisfying control, not only the first one.
    pub all_controls: bool,
    /// Skip work whose outcome cannot change: transitions are computed once per
    /// (step, symbol, control) and stored, symbols that are already valid keep their control,
    /// and a step is not recomputed when the next step's valid set did not grow. Valid sets
    /// only ever grow during refinement, so the resulting valid sets are the same as with
    /// full recomputation; only the number of reach evaluations differs.
    pub incremental: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { max_depth: 6, all_controls: false, incremental: true }
    }
}

/// Valid symbols `V_iᵏ` of every step `k = 0..=r`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidTable {
    steps: Vec<BTreeSet<SymbolId>>,
}

impl ValidTable {
    pub fn new(horizon: usize) -> Self {
        Self { steps: vec![BTreeSet::new(); horizon + 1] }
    }

    pub fn from_steps(steps: Vec<BTreeSet<SymbolId>>) -> Self {
        Self { steps }
    }

    pub fn step(&self, k: usize) -> &BTreeSet<SymbolId> {
        &self.steps[k]
    }

    pub fn set_step(&mut self, k: usize, symbols: BTreeSet<SymbolId>) {
        self.steps[k] = symbols;
    }

    pub fn horizon(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn steps(&self) -> &[BTreeSet<SymbolId>] {
        &self.steps
    }
}

/// Chosen control of one valid symbol, as indices into the subsystem's ordered control list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlChoice {
    pub first: usize,
    /// Every satisfying control; empty unless all controls were requested.
    pub all: Vec<usize>,
}

/// Map `(step, symbol) → control` of one subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalController<S> {
    subsystem: usize,
    controls: Vec<usize>,
    control_values: Vec<Vec<S>>,
    entries: BTreeMap<(usize, SymbolId), ControlChoice>,
}

impl<S: Scalar> LocalController<S> {
    /// Empty controller over control dims `controls` with the ordered value list.
    pub fn new(subsystem: usize, controls: Vec<usize>, control_values: Vec<Vec<S>>) -> Self {
        Self { subsystem, controls, control_values, entries: BTreeMap::new() }
    }

    pub fn subsystem(&self) -> usize {
        self.subsystem
    }

    /// `J_i`.
    pub fn control_dims(&self) -> &[usize] {
        &self.controls
    }

    pub fn control_values(&self) -> &[Vec<S>] {
        &self.control_values
    }

    pub fn choice(&self, k: usize, s: &SymbolId) -> Option<&ControlChoice> {
        self.entries.get(&(k, s.clone()))
    }

    /// Control value assigned to `s` at step `k`.
    pub fn get(&self, k: usize, s: &SymbolId) -> Option<&[S]> {
        self.choice(k, s).map(|c| self.control_values[c.first].as_slice())
    }

    pub fn insert(&mut self, k: usize, s: SymbolId, choice: ControlChoice) {
        self.entries.insert((k, s), choice);
    }

    /// Replaces every entry of step `k`.
    pub fn replace_step(&mut self, k: usize, choices: BTreeMap<SymbolId, ControlChoice>) {
        self.entries.retain(|(step, _), _| *step != k);
        self.entries.extend(choices.into_iter().map(|(s, c)| ((k, s), c)));
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &SymbolId, &ControlChoice)> {
        self.entries.iter().map(|((k, s), c)| (*k, s, c))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Output of one valid-set computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidSets {
    pub valid: BTreeSet<SymbolId>,
    pub choices: BTreeMap<SymbolId, ControlChoice>,
    /// Reach-set evaluations performed.
    pub evaluations: u64,
}

/// Valid symbols of step `k` against the valid symbols `next` of step `k + 1`.
///
/// Controls are tried in declaration order and the first satisfying one is kept (all of them
/// when `all_controls`). Symbols are processed in parallel; results keep symbol order.
pub fn valid_sets<S: Scalar>(
    abs: &SubsystemAbstraction<S>,
    k: usize,
    next: &BTreeSet<SymbolId>,
    all_controls: bool,
) -> Result<ValidSets, AbstractionError> {
    valid_sets_except(abs, k, next, all_controls, &BTreeSet::new())
}

/// [`valid_sets`] restricted to the symbols of step `k` that are not in `skip`.
pub fn valid_sets_except<S: Scalar>(
    abs: &SubsystemAbstraction<S>,
    k: usize,
    next: &BTreeSet<SymbolId>,
    all_controls: bool,
    skip: &BTreeSet<SymbolId>,
) -> Result<ValidSets, AbstractionError> {
    valid_sets_cached(abs, k, next, all_controls, skip, &mut TransitionCache::default())
}

/// Stored `π_{I_i}(rs_ag2)` boxes of one step, keyed by symbol and control index.
///
/// A transition depends only on its symbol, control and step, so entries stay correct while
/// other symbols are split; entries of split symbols are simply never looked up again.
#[derive(Clone, Debug)]
pub struct TransitionCache<S> {
    entries: BTreeMap<(SymbolId, usize), Option<IntervalBox<S>>>,
}

impl<S> Default for TransitionCache<S> {
    fn default() -> Self {
        Self { entries: BTreeMap::new() }
    }
}

impl<S> TransitionCache<S> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bounding box of the closed boxes of `region` in `partition`.
fn region_hull<S: Scalar>(partition: &RefinedPartition<S>, region: &BTreeSet<SymbolId>) -> Option<IntervalBox<S>> {
    let mut boxes = region.iter().filter_map(|s| partition.symbol_box(s).ok());
    let first = boxes.next()?;
    let (mut low, mut high) = (first.low().to_vec(), first.high().to_vec());
    for b in boxes {
        for p in 0..low.len() {
            low[p] = low[p].min(b.low()[p]);
            high[p] = high[p].max(b.high()[p]);
        }
    }
    IntervalBox::new(partition.dims().to_vec(), low, high).ok()
}

/// `a ⪯ b` in the order under which reach sets grow: increasing controls compare as is,
/// decreasing ones reversed, and controls the dynamics ignore are always comparable.
fn control_le<S: Scalar>(a: &[S], b: &[S], signs: &[Sign]) -> bool {
    a.iter().zip(b).zip(signs).all(|((&x, &y), sign)| match sign {
        Sign::Increasing => x <= y,
        Sign::Decreasing => x >= y,
        Sign::Independent => true,
    })
}

/// [`valid_sets_except`] that reuses and extends `cache`; only cache misses are evaluated.
///
/// Controls are also skipped without evaluation when monotonicity already rules them out: if
/// the reach box under `u` lies strictly above the hull of `next` in some dimension, so does
/// the box under every `u' ⪰ u`, and symmetrically below. Skipped pairs are invalid, so the
/// result is the same as evaluating them.
pub fn valid_sets_cached<S: Scalar>(
    abs: &SubsystemAbstraction<S>,
    k: usize,
    next: &BTreeSet<SymbolId>,
    all_controls: bool,
    skip: &BTreeSet<SymbolId>,
    cache: &mut TransitionCache<S>,
) -> Result<ValidSets, AbstractionError> {
    type Computed<S> = Vec<(usize, Option<IntervalBox<S>>)>;
    let symbols: Vec<SymbolId> = abs.step_symbols(k)?.into_iter().filter(|s| !skip.contains(s)).collect();
    let partition = abs.partition(k + 1);
    let stored = &*cache;
    let Some(hull) = region_hull(partition, next) else {
        return Ok(ValidSets { valid: BTreeSet::new(), choices: BTreeMap::new(), evaluations: 0 });
    };
    let mono = &abs.evaluator().system().monotonicity().control;
    let signs: Vec<Sign> = abs.spec().controls.iter().map(|&j| mono[j]).collect();
    let per_symbol: Vec<(SymbolId, Option<ControlChoice>, Computed<S>)> = symbols
        .into_par_iter()
        .map(|s| {
            let mut satisfying = Vec::new();
            let mut computed = Vec::new();
            // Controls whose reach box was entirely above / below the hull.
            let mut above: Vec<&[S]> = Vec::new();
            let mut below: Vec<&[S]> = Vec::new();
            for (index, u) in abs.control_values().iter().enumerate() {
                if above.iter().any(|a| control_le(a, u, &signs)) || below.iter().any(|b| control_le(u, b, &signs)) {
                    continue;
                }
                let reach = match stored.entries.get(&(s.clone(), index)) {
                    Some(r) => r.clone(),
                    None => {
                        let r = abs.projected_reach(&s, u, k)?;
                        computed.push((index, r.clone()));
                        r
                    }
                };
                if let Some(r) = &reach {
                    if (0..r.dim_count()).any(|p| r.low()[p] > hull.high()[p]) {
                        above.push(u);
                    }
                    if (0..r.dim_count()).any(|p| r.high()[p] < hull.low()[p]) {
                        below.push(u);
                    }
                }
                if reach.is_some_and(|r| partition.covered_by(&r, next)) {
                    satisfying.push(index);
                    if !all_controls {
                        break;
                    }
                }
            }
            let choice = satisfying.first().map(|&first| ControlChoice {
                first,
                all: if all_controls { satisfying.clone() } else { Vec::new() },
            });
            Ok((s, choice, computed))
        })
        .collect::<Result<_, AbstractionError>>()?;
    let mut out = ValidSets { valid: BTreeSet::new(), choices: BTreeMap::new(), evaluations: 0 };
    for (s, choice, computed) in per_symbol {
        out.evaluations += computed.len() as u64;
        for (index, reach) in computed {
            cache.entries.insert((s.clone(), index), reach);
        }
        if let Some(c) = choice {
            out.valid.insert(s.clone());
            out.choices.insert(s, c);
        }
    }
    Ok(out)
}

/// One iteration of the refinement loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefinementEvent {
    /// Step whose valid set was empty.
    pub solving_step: usize,
    /// Step whose invalid symbols were split.
    pub refined_step: usize,
    /// Refinement count of `refined_step` after the split.
    pub depth: usize,
    /// Symbols split in this iteration.
    pub split_symbols: usize,
    /// `|V_iᵏ|` of the solving step after the update.
    pub valid_after: usize,
    /// Cumulative evaluations of this subsystem.
    pub evaluations: u64,
}

/// Result of a successful refinement.
#[derive(Clone, Debug)]
pub struct RefinementResult<S> {
    pub abstraction: SubsystemAbstraction<S>,
    pub valid: ValidTable,
    pub controller: LocalController<S>,
    pub trace: Vec<RefinementEvent>,
    /// Reach-set evaluations performed for this subsystem.
    pub evaluations: u64,
}

impl<S: Scalar> RefinementResult<S> {
    /// Steps refined, in order.
    pub fn refined_steps(&self) -> Vec<usize> {
        self.trace.iter().map(|e| e.refined_step).collect()
    }
}

/// Refines `abs` until step 0 has a valid symbol.
pub fn refine_subsystem<S: Scalar>(
    mut abs: SubsystemAbstraction<S>,
    opts: &RefineOptions,
) -> Result<RefinementResult<S>, RefineError> {
    let id = abs.spec().id;
    let r = abs.sequence().horizon();
    let mut valid = ValidTable::new(r);
    valid.set_step(r, abs.step_symbols(r)?.into_iter().collect());
    let mut controller =
        LocalController::new(id, abs.spec().controls.clone(), abs.control_values().to_vec());
    let mut queue = RefineQueue::new();
    let mut trace = Vec::new();
    let mut evaluations = 0u64;

    // `stamp[l]`: version of V^{l+1} that V^l was last computed against.
    let mut version = vec![0u64; r + 1];
    let mut stamp = vec![u64::MAX; r + 1];
    let mut caches: Vec<TransitionCache<S>> = (0..r).map(|_| TransitionCache::default()).collect();

    for k in (0..r).rev() {
        let vs = if opts.incremental {
            let none = BTreeSet::new();
            valid_sets_cached(&abs, k, valid.step(k + 1), opts.all_controls, &none, &mut caches[k])?
        } else {
            valid_sets(&abs, k, valid.step(k + 1), opts.all_controls)?
        };
        evaluations += vs.evaluations;
        version[k] += 1;
        stamp[k] = version[k + 1];
        valid.set_step(k, vs.valid);
        controller.replace_step(k, vs.choices);
        queue.add(k);
        debug!(subsystem = id, step = k, valid = valid.step(k).len(), "valid set computed");

        while valid.step(k).is_empty() {
            let pick = {
                let abs = &abs;
                let valid = &valid;
                queue.first(|e| {
                    e.depth < opts.max_depth
                        && abs
                            .step_symbols(e.step)
                            .map(|syms| syms.iter().any(|s| !valid.step(e.step).contains(s)))
                            .unwrap_or(false)
                })
            };
            let Some(entry) = pick else {
                let depth = queue.entries().iter().map(|e| e.depth).max().unwrap_or(0);
                return Err(RefineError::Unrealizable {
                    subsystem: id,
                    step: k,
                    cell: abs.sequence().cell(k).map_err(AbstractionError::from)?,
                    depth,
                });
            };
            let j = entry.step;
            let invalid: Vec<SymbolId> =
                abs.step_symbols(j)?.into_iter().filter(|s| !valid.step(j).contains(s)).collect();
            for s in &invalid {
                abs.partition_mut(j).split(s).map_err(AbstractionError::from)?;
            }
            let depth = queue.mark_refined(j);
            for l in (k..=j).rev() {
                let incremental = opts.incremental && !opts.all_controls;
                if incremental && l != j && stamp[l] == version[l + 1] {
                    continue;
                }
                let before = valid.step(l).len();
                if incremental {
                    let vs = valid_sets_cached(&abs, l, valid.step(l + 1), false, valid.step(l), &mut caches[l])?;
                    evaluations += vs.evaluations;
                    let mut grown = valid.step(l).clone();
                    grown.extend(vs.valid);
                    valid.set_step(l, grown);
                    for (s, c) in vs.choices {
                        controller.insert(l, s, c);
                    }
                } else {
                    let vs = if opts.incremental {
                        let none = BTreeSet::new();
                        valid_sets_cached(&abs, l, valid.step(l + 1), opts.all_controls, &none, &mut caches[l])?
                    } else {
                        valid_sets(&abs, l, valid.step(l + 1), opts.all_controls)?
                    };
                    evaluations += vs.evaluations;
                    valid.set_step(l, vs.valid);
                    controller.replace_step(l, vs.choices);
                }
                stamp[l] = version[l + 1];
                if valid.step(l).len() != before {
                    version[l] += 1;
                }
            }
            info!(
                subsystem = id,
                step = k,
                refined = j,
                depth,
                valid = valid.step(k).len(),
                evaluations,
                "refined"
            );
            trace.push(RefinementEvent {
                solving_step: k,
                refined_step: j,
                depth,
                split_symbols: invalid.len(),
                valid_after: valid.step(k).len(),
                evaluations,
            });
        }
    }
    Ok(RefinementResult { abstraction: abs, valid, controller, trace, evaluations })
}

/// Refines every subsystem independently (in parallel); results keep subsystem order and the
/// reported error is the one of the lowest-indexed failing subsystem.
pub fn synthesize<S: Scalar>(
    abstractions: Vec<SubsystemAbstraction<S>>,
    opts: &RefineOptions,
) -> Result<Vec<RefinementResult<S>>, RefineError> {
    let results: Vec<_> = abstractions.into_par_iter().map(|abs| refine_subsystem(abs, opts)).collect();
    results.into_iter().collect()
}
