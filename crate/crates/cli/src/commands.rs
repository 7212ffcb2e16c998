//! The four verbs. Each reads a [`RunConfig`], writes its artifacts under `out` and returns
//! its report; failures map onto [`CliError`] exit codes.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use compref::composition::{Component, TraceFailure};
use compref::decomposition::Problem;
use compref::refinement::{synthesize as refine_all, RefineError};
use compref::ufad::{table1, CountingInputs};
use compref::{ComposedPartition, GlobalController, IntervalBox, RefineOptions, RefinementResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tracing::info;

use crate::export::{self, TraceRow};
use crate::report::*;
use crate::{CliError, RunConfig};

/// Compositions with more candidate cells than this are not formed by `verify`.
pub const COMPOSITION_LIMIT: usize = 200_000;
const START_ATTEMPTS: usize = 10_000;
const MAX_LISTED: usize = 8;

pub fn problem_label(cfg: &RunConfig) -> String {
    cfg.scenario.clone().unwrap_or_else(|| "affine".into())
}

fn subsystem_name(i: usize) -> String {
    format!("S{}", i + 1)
}

/// Runs `f` on a pool of `threads` workers (rayon's default when 0).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} threads: {e}")))?;
    Ok(pool.install(f))
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("cannot create {}", dir.display())))
}

/// Adds `seconds` under `verb` in `timing.json`; kept apart from the reports so those stay
/// byte-identical between runs.
fn record_timing(dir: &Path, verb: &str, seconds: f64) -> Result<(), CliError> {
    let path = dir.join("timing.json");
    let mut timing: BTreeMap<String, f64> = if path.exists() { read_json(&path).unwrap_or_default() } else { BTreeMap::new() };
    timing.insert(verb.into(), seconds);
    write_json(&path, &timing)
}

fn unrealizable(problem: &Problem<f64>, e: RefineError) -> CliError {
    match e {
        RefineError::Unrealizable { subsystem, step, cell, depth } => CliError::Unrealizable(format!(
            "subsystem {} has no valid symbol at step {step} (cell {:?}) after refining to depth {depth}",
            subsystem_name(subsystem),
            problem.sequence.grid().cell_coords(cell),
        )),
        other => CliError::Internal(other.into()),
    }
}

pub fn refine_options(cfg: &RunConfig) -> RefineOptions {
    RefineOptions { max_depth: cfg.max_depth, all_controls: false, incremental: cfg.incremental }
}

fn summary(problem: &Problem<f64>, r: &RefinementResult<f64>) -> SubsystemSummary {
    let abs = &r.abstraction;
    let spec = abs.spec();
    let horizon = problem.sequence.horizon();
    let depth = (0..=horizon)
        .map(|k| abs.projected_cell(k).map(|c| abs.partition(k).depth(c)).unwrap_or(0))
        .max()
        .unwrap_or(0);
    SubsystemSummary {
        name: subsystem_name(spec.id),
        controlled: spec.controlled.clone(),
        observed: spec.observed.clone(),
        controls: spec.controls.clone(),
        refinements: r.trace.len(),
        trace: r.refined_steps(),
        depth,
        symbols: abs.partitions().iter().map(|p| p.leaf_count()).collect(),
        valid: r.valid.steps().iter().map(|v| v.len()).collect(),
        controller_entries: r.controller.len(),
        evaluations: r.evaluations,
    }
}

/// Refines every subsystem without writing anything.
pub fn run_synthesis(cfg: &RunConfig) -> Result<(SynthesisReport, Vec<RefinementResult<f64>>), CliError> {
    let problem = cfg.problem()?;
    let abstractions = problem.abstractions().map_err(|e| CliError::Config(e.to_string()))?;
    let opts = refine_options(cfg);
    let results = with_threads(cfg.threads, || refine_all(abstractions, &opts))?.map_err(|e| unrealizable(&problem, e))?;
    let subsystems: Vec<_> = results.iter().map(|r| summary(&problem, r)).collect();
    let report = SynthesisReport {
        problem: problem_label(cfg),
        horizon: problem.sequence.horizon(),
        max_depth: cfg.max_depth,
        incremental: cfg.incremental,
        total_evaluations: subsystems.iter().map(|s| s.evaluations).sum(),
        subsystems,
    };
    Ok((report, results))
}

pub fn synthesize(cfg: &RunConfig) -> Result<SynthesisReport, CliError> {
    let start = Instant::now();
    let (report, results) = run_synthesis(cfg)?;
    prepare_out(&cfg.out)?;
    for r in results {
        export::write_component(&cfg.out, &Component::from(r))?;
    }
    write_json(&cfg.out.join("synthesis.json"), &report)?;
    record_timing(&cfg.out, "synthesize", start.elapsed().as_secs_f64())?;
    info!(evaluations = report.total_evaluations, "synthesis written to {}", cfg.out.display());
    Ok(report)
}

/// Rebuilds the global controller from the CSV artifacts in `out`.
pub fn load_controller(cfg: &RunConfig) -> Result<GlobalController<f64>, CliError> {
    let problem = cfg.problem()?;
    let abstractions = problem.abstractions().map_err(|e| CliError::Config(e.to_string()))?;
    let components = abstractions
        .into_iter()
        .map(|abs| {
            let id = abs.spec().id;
            if !export::partition_file(&cfg.out, id).exists() {
                return Err(CliError::Config(format!(
                    "no controller for {} in {}; run `synthesize` first",
                    subsystem_name(id),
                    cfg.out.display()
                )));
            }
            export::read_component(&cfg.out, abs)
        })
        .collect::<Result<Vec<_>, _>>()?;
    GlobalController::new(components).map_err(|e| CliError::Config(e.to_string()))
}

/// Stream-separated generator of trial `t`, so trials do not depend on scheduling.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn simulate(cfg: &RunConfig) -> Result<SimulationReport, CliError> {
    let start = Instant::now();
    let ctl = load_controller(cfg)?;
    let outcomes = with_threads(cfg.threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, t);
                let Some((x0, misses)) = ctl.sample_valid_state(0, &mut rng, START_ATTEMPTS) else {
                    return Ok((None, START_ATTEMPTS));
                };
                Ok((Some(ctl.run_closed_loop(&x0, &mut rng)?), misses))
            })
            .collect::<Result<Vec<_>, compref::composition::CompositionError>>()
    })?
    .map_err(|e| CliError::Internal(e.into()))?;

    let mut report = SimulationReport {
        seed: cfg.seed,
        trials: cfg.trials,
        satisfied: 0,
        violated: 0,
        rejected_starts: 0,
        failures: Vec::new(),
    };
    let mut rows: Vec<TraceRow> = Vec::new();
    for (t, (trace, misses)) in outcomes.into_iter().enumerate() {
        report.rejected_starts += misses;
        let Some(trace) = trace else {
            report.violated += 1;
            if report.failures.len() < MAX_LISTED {
                report.failures.push((t, 0, "no valid initial state found".into()));
            }
            continue;
        };
        if trace.satisfied {
            report.satisfied += 1;
        } else {
            report.violated += 1;
            if report.failures.len() < MAX_LISTED {
                let failure = match trace.failure {
                    Some(TraceFailure::OutsideSpec { step }) => (t, step, "left the specification".into()),
                    Some(TraceFailure::Undefined { step, subsystem }) => {
                        (t, step, format!("no control for {}", subsystem_name(subsystem)))
                    }
                    None => (t, 0, "unknown".into()),
                };
                report.failures.push(failure);
            }
        }
        rows.extend(export::trace_rows(t, &trace));
    }
    prepare_out(&cfg.out)?;
    export::write_csv(&cfg.out.join("traces.csv"), &rows)?;
    write_json(&cfg.out.join("simulation.json"), &report)?;
    record_timing(&cfg.out, "simulate", start.elapsed().as_secs_f64())?;
    if report.violated > 0 {
        return Err(CliError::Verification(format!(
            "{} of {} closed-loop trials violated the specification",
            report.violated, report.trials
        )));
    }
    Ok(report)
}

/// Counts pairs of cells with overlapping interiors, sweeping along the dim with the most
/// distinct lower bounds.
pub fn overlaps(cells: &[IntervalBox<f64>]) -> usize {
    let Some(first) = cells.first() else {
        return 0;
    };
    let distinct = |p: usize| {
        let mut lows: Vec<f64> = cells.iter().map(|c| c.low()[p]).collect();
        lows.sort_by(f64::total_cmp);
        lows.dedup();
        lows.len()
    };
    let p = (0..first.dim_count()).max_by_key(|&p| distinct(p)).unwrap_or(0);
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| cells[a].low()[p].total_cmp(&cells[b].low()[p]));
    let mut count = 0;
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if cells[b].low()[p] >= cells[a].high()[p] {
                break;
            }
            if cells[a].interiors_overlap(&cells[b]) {
                count += 1;
            }
        }
    }
    count
}

fn volume_error(cells: &[IntervalBox<f64>], domain: &IntervalBox<f64>) -> f64 {
    let total: f64 = cells.iter().map(IntervalBox::volume).sum();
    ((total - domain.volume()) / domain.volume()).abs()
}

const VOLUME_TOLERANCE: f64 = 1e-9;

fn partition_laws(ctl: &GlobalController<f64>) -> Result<(Vec<PartitionLaw>, Vec<CompositionLaw>), CliError> {
    let internal = |e: compref::composition::CompositionError| CliError::Internal(e.into());
    let mut laws = Vec::new();
    let mut comps = Vec::new();
    for k in 0..=ctl.horizon() {
        let parts: Vec<ComposedPartition<f64>> = ctl
            .components()
            .iter()
            .map(|c| ComposedPartition::from_partition(c.abstraction.partition(k)))
            .collect::<Result<_, _>>()
            .map_err(internal)?;
        for (i, p) in parts.iter().enumerate() {
            let err = volume_error(p.cells(), p.domain());
            let overlaps = overlaps(p.cells());
            let valid_known = ctl.valid_symbols(i, k).iter().all(|s| ctl.components()[i].abstraction.partition(k).is_leaf(s));
            laws.push(PartitionLaw {
                subsystem: subsystem_name(i),
                step: k,
                cells: p.len(),
                relative_volume_error: err,
                overlaps,
                passed: err <= VOLUME_TOLERANCE && overlaps == 0 && valid_known,
            });
        }
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                let pair = (subsystem_name(i), subsystem_name(j));
                if parts[i].len().saturating_mul(parts[j].len()) > COMPOSITION_LIMIT {
                    comps.push(CompositionLaw { pair, step: k, cells: None, relative_volume_error: 0.0, overlaps: 0, passed: true });
                    continue;
                }
                let cap = parts[i].cap(&parts[j]).map_err(internal)?;
                let err = volume_error(cap.cells(), cap.domain());
                let overlaps = overlaps(cap.cells());
                comps.push(CompositionLaw {
                    pair,
                    step: k,
                    cells: Some(cap.len()),
                    relative_volume_error: err,
                    overlaps,
                    passed: err <= VOLUME_TOLERANCE && overlaps == 0,
                });
            }
        }
    }
    Ok((laws, comps))
}

pub fn verify(cfg: &RunConfig) -> Result<VerifyReport, CliError> {
    let start = Instant::now();
    let ctl = load_controller(cfg)?;
    let internal = |e: compref::composition::CompositionError| CliError::Internal(e.into());
    let (feedback, nonblocking, laws) = with_threads(cfg.threads, || {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let feedback = ctl.check_feedback_refinement(cfg.verify_samples, &mut rng);
        (feedback, ctl.check_nonblocking(), partition_laws(&ctl))
    })?;
    let feedback = feedback.map_err(internal)?;
    let nonblocking = nonblocking.map_err(internal)?;
    let (partitions, compositions) = laws?;
    let feedback = FeedbackSummary {
        samples: feedback.samples,
        rejected: feedback.rejected,
        violations: feedback.violations,
        passed: feedback.violations == 0 && feedback.samples == cfg.verify_samples,
        examples: feedback
            .examples
            .iter()
            .map(|v| {
                let who = v.subsystem.map(subsystem_name).unwrap_or_else(|| "specification".into());
                format!("step {}: {who} from {:?} to {:?}", v.step, v.x, v.next)
            })
            .collect(),
    };
    let nonblocking = NonblockingSummary {
        checked: nonblocking.checked,
        blocking: nonblocking.blocking.len(),
        passed: nonblocking.passed(),
        examples: nonblocking
            .blocking
            .iter()
            .take(MAX_LISTED)
            .map(|(i, k, s)| format!("{} step {k} symbol {s}", subsystem_name(*i)))
            .collect(),
    };
    let passed = feedback.passed
        && nonblocking.passed
        && partitions.iter().all(|l| l.passed)
        && compositions.iter().all(|l| l.passed);
    let report = VerifyReport { seed: cfg.seed, feedback, nonblocking, partitions, compositions, passed };
    prepare_out(&cfg.out)?;
    write_json(&cfg.out.join("verify.json"), &report)?;
    record_timing(&cfg.out, "verify", start.elapsed().as_secs_f64())?;
    if !report.passed {
        let mut what = Vec::new();
        if !report.feedback.passed {
            what.push(format!("{} feedback violations", report.feedback.violations));
        }
        if !report.nonblocking.passed {
            what.push(format!("{} blocking symbols ({})", report.nonblocking.blocking, report.nonblocking.examples.join("; ")));
        }
        if report.partitions.iter().any(|l| !l.passed) || report.compositions.iter().any(|l| !l.passed) {
            what.push("partition laws".into());
        }
        return Err(CliError::Verification(what.join(", ")));
    }
    Ok(report)
}

fn stats_table(problem: &Problem<f64>, depth: usize, measured: Option<u64>) -> StatsTable {
    let grid = problem.sequence.grid();
    let cells = (0..grid.dims().len()).map(|p| grid.cells_along(p)).max().unwrap_or(1);
    let t = table1(&CountingInputs::from_problem(problem, cells, depth), measured);
    let row = |strategy: &str, evaluations, analytic, formula: &str| StatsRow {
        strategy: strategy.into(),
        evaluations,
        analytic,
        formula: formula.into(),
    };
    StatsTable {
        finest_depth: depth,
        intervals_per_dim: cells * problem.arity.pow(depth as u32),
        rows: vec![
            row("compositional refinement", measured.map(|m| m as f64), false, "measured"),
            row("compositional abstraction", Some(t.compositional_abstraction), true, &t.formulas[0]),
            row("centralized abstraction", Some(t.centralized_abstraction), true, &t.formulas[1]),
            row("centralized refinement", Some(t.centralized_refinement), true, &t.formulas[2]),
        ],
    }
}

/// Evaluation counts of the four strategies. The measured entry comes from `synthesis.json`
/// in `out` when present, otherwise from a fresh (unsaved) synthesis.
pub fn stats(cfg: &RunConfig) -> Result<StatsReport, CliError> {
    let start = Instant::now();
    let problem = cfg.problem()?;
    let saved = cfg.out.join("synthesis.json");
    let synthesis: SynthesisReport = if saved.exists() { read_json(&saved)? } else { run_synthesis(cfg)?.0 };
    let measured = Some(synthesis.total_evaluations);
    let reached = synthesis.subsystems.iter().map(|s| s.depth).max().unwrap_or(0);
    let mut tables = vec![stats_table(&problem, cfg.counting_depth, measured)];
    if reached != cfg.counting_depth {
        tables.push(stats_table(&problem, reached, measured));
    }
    let report = StatsReport { problem: problem_label(cfg), tables };
    prepare_out(&cfg.out)?;
    write_json(&cfg.out.join("table1.json"), &report)?;
    record_timing(&cfg.out, "stats", start.elapsed().as_secs_f64())?;
    Ok(report)
}
