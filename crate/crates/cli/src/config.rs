//! TOML run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use compref::decomposition::{control_grid, Problem};
use compref::dynamics::{Affine, TimeModel};
use compref::ufad::{ufad_problem, UfadParams, UfadSettings};
use compref::{CellSequence, GridPartition, IntervalBox, ReachEvaluator, SubsystemSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCENARIOS: &[&str] = &["ufad8"];

/// Everything a run needs. Either `scenario` names a built-in problem (whose parameters can be
/// overridden in `[ufad]` / `[settings]`) or `[system]` describes an affine system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub seed: u64,
    pub max_depth: usize,
    pub trials: usize,
    /// Transitions sampled by `verify`.
    pub verify_samples: usize,
    pub out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub incremental: bool,
    /// Refinement depth at which the Table 1 counting formulas are evaluated.
    pub counting_depth: usize,
    pub ufad: UfadParams,
    pub settings: UfadSettings,
    pub system: Option<AffineSystemConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            seed: 1,
            max_depth: 6,
            trials: 500,
            verify_samples: 500,
            out: PathBuf::from("out"),
            threads: 0,
            incremental: true,
            counting_depth: 4,
            ufad: UfadParams::default(),
            settings: UfadSettings::default(),
            system: None,
        }
    }
}

/// A user-supplied affine system `x⁺ = A x + B u + E w + c` (or `ẋ = …`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSystemConfig {
    pub time: TimeModel,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub state_low: Vec<f64>,
    pub state_high: Vec<f64>,
    pub control_low: Vec<f64>,
    pub control_high: Vec<f64>,
    pub disturbance_low: Vec<f64>,
    pub disturbance_high: Vec<f64>,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one_step")]
    pub integrator_steps: usize,
    /// Equal-width cells per dimension; ignored when `cuts` is given.
    #[serde(default)]
    pub cells: Vec<usize>,
    /// Interior cut points per dimension.
    #[serde(default)]
    pub cuts: Option<Vec<Vec<f64>>>,
    /// Cell coordinates of `σ⁰ … σʳ`.
    pub spec: Vec<Vec<usize>>,
    #[serde(default = "two")]
    pub arity: usize,
    pub subsystems: Vec<SubsystemConfig>,
}

fn one() -> f64 {
    1.0
}

fn one_step() -> usize {
    1
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsystemConfig {
    pub controlled: Vec<usize>,
    #[serde(default)]
    pub observed: Vec<usize>,
    pub controls: Vec<usize>,
    /// Levels per control dim; the subsystem's control set is their grid.
    pub levels: Vec<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Checks the choice of system; dimensional consistency is checked by [`Self::problem`].
    pub fn check(&self) -> Result<(), CliError> {
        match (&self.scenario, &self.system) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `scenario` or `[system]`, not both".into())),
            (None, None) => Err(CliError::Config("no `scenario` and no `[system]` given".into())),
            (Some(name), None) if !SCENARIOS.contains(&name.as_str()) => {
                Err(CliError::Config(format!("unknown scenario `{name}` (known: {})", SCENARIOS.join(", "))))
            }
            _ => Ok(()),
        }
    }

    /// Builds and cross-validates the synthesis problem.
    pub fn problem(&self) -> Result<Problem<f64>, CliError> {
        self.check()?;
        let problem = match &self.system {
            Some(sys) => sys.problem()?,
            None => ufad_problem::<f64>(&self.ufad, &self.settings).map_err(|e| CliError::Config(e.to_string()))?,
        };
        // Runs the decomposition, control-set and grid checks.
        problem.abstractions().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(problem)
    }
}

impl AffineSystemConfig {
    pub fn problem(&self) -> Result<Problem<f64>, CliError> {
        let cfg = |e: &dyn std::fmt::Display| CliError::Config(e.to_string());
        let states = IntervalBox::from_bounds(self.state_low.clone(), self.state_high.clone()).map_err(|e| cfg(&e))?;
        let controls =
            IntervalBox::from_bounds(self.control_low.clone(), self.control_high.clone()).map_err(|e| cfg(&e))?;
        let disturbances = IntervalBox::from_bounds(self.disturbance_low.clone(), self.disturbance_high.clone())
            .map_err(|e| cfg(&e))?;
        let affine = Affine { a: self.a.clone(), b: self.b.clone(), e: self.e.clone(), c: self.c.clone() };
        let system = affine.into_system(self.time, states.clone(), controls, disturbances).map_err(|e| cfg(&e))?;
        let grid = match &self.cuts {
            Some(cuts) => GridPartition::new(states, cuts.clone()),
            None => GridPartition::uniform(states, &self.cells),
        }
        .map_err(|e| cfg(&e))?;
        let sequence = CellSequence::from_coords(Arc::new(grid), &self.spec).map_err(|e| cfg(&e))?;
        let subsystems = self
            .subsystems
            .iter()
            .enumerate()
            .map(|(i, s)| SubsystemSpec::new(i, &s.controlled, &s.observed, &s.controls))
            .collect();
        let control_values = self.subsystems.iter().map(|s| control_grid(s.controls.len(), &s.levels)).collect();
        Ok(Problem {
            evaluator: Arc::new(ReachEvaluator::new(Arc::new(system), self.tau, self.integrator_steps)),
            sequence: Arc::new(sequence),
            subsystems,
            control_values,
            arity: self.arity,
        })
    }
}
