//! JSON reports written next to the CSV artifacts.

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub problem: String,
    pub horizon: usize,
    pub max_depth: usize,
    pub incremental: bool,
    pub subsystems: Vec<SubsystemSummary>,
    pub total_evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsystemSummary {
    pub name: String,
    pub controlled: Vec<usize>,
    pub observed: Vec<usize>,
    pub controls: Vec<usize>,
    pub refinements: usize,
    /// Refined step per refinement, in order.
    pub trace: Vec<usize>,
    /// Deepest refinement of any step.
    pub depth: usize,
    /// Leaves per step.
    pub symbols: Vec<usize>,
    /// Valid symbols per step.
    pub valid: Vec<usize>,
    pub controller_entries: usize,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub trials: usize,
    pub satisfied: usize,
    pub violated: usize,
    /// Initial draws outside the valid region, not counted as trials.
    pub rejected_starts: usize,
    /// `(trial, step, reason)` of the first failures.
    pub failures: Vec<(usize, usize, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub feedback: FeedbackSummary,
    pub nonblocking: NonblockingSummary,
    pub partitions: Vec<PartitionLaw>,
    pub compositions: Vec<CompositionLaw>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSummary {
    pub samples: usize,
    pub rejected: usize,
    pub violations: usize,
    pub examples: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonblockingSummary {
    pub checked: usize,
    pub blocking: usize,
    /// `S<i> step <k> symbol <cell>/[path]` of the first blocking symbols.
    pub examples: Vec<String>,
    pub passed: bool,
}

/// Tiling check of one step's partition of one subsystem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionLaw {
    pub subsystem: String,
    pub step: usize,
    pub cells: usize,
    pub relative_volume_error: f64,
    pub overlaps: usize,
    pub passed: bool,
}

/// Volume and disjointness of the composition of two subsystems' partitions at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionLaw {
    pub pair: (String, String),
    pub step: usize,
    /// `None` when the composition exceeded the size limit and was not formed.
    pub cells: Option<usize>,
    pub relative_volume_error: f64,
    pub overlaps: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub problem: String,
    /// One table at the reference depth and one at the deepest refinement reached.
    pub tables: Vec<StatsTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsTable {
    pub finest_depth: usize,
    pub intervals_per_dim: usize,
    pub rows: Vec<StatsRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub strategy: String,
    pub evaluations: Option<f64>,
    /// Counted from a formula rather than measured.
    pub analytic: bool,
    pub formula: String,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.into()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(CliError::io(format!("cannot write {}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(format!("cannot read {}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
