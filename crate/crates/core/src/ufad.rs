//! Eight-room underfloor air distribution (UFAD) building benchmark.
//!
//! Room temperatures follow
//!
//! ```text
//! dT_i/dt = Σ_{j∈N_i} a_ij (T_j − T_i) + u_i b (T_i − T_u) + c (T_b⁴ − T_i⁴)
//! ```
//!
//! where `N_i` holds the adjacent rooms plus the underfloor, ceiling and outside spaces,
//! `a_ij` is `a_wall` or `a_door`, and the radiation term is evaluated in Kelvin. Room 6
//! (index 5) is ventilated by `0.75 u₆ + 0.25 u₈`. Disturbances are `(T_u, T_c, T_o)`; the
//! body temperature `T_b` is a fixed constant.
//!
//! Rooms are numbered 1..8 in documentation and 0..7 in code.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposition::{control_grid, Problem, SubsystemSpec};
use crate::dynamics::{ControlSystem, DynamicsError, Monotonicity, ReachEvaluator, VectorField};
use crate::geometry::{GeometryError, GridPartition, IntervalBox};
use crate::specification::{CellSequence, SpecError};
use crate::Scalar;

pub const ROOMS: usize = 8;
const KELVIN: f64 = 273.15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UfadError {
    #[error("room index {0} out of range")]
    BadRoom(usize),
    #[error("rooms {0} and {1} are listed twice")]
    DuplicateLink(usize, usize),
    #[error("room {0} cannot be linked to itself")]
    SelfLink(usize),
    #[error("ventilation mix must be non-negative and sum to 1")]
    BadMix,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contact {
    Wall,
    Door,
}

/// Room adjacency. Every room additionally exchanges heat with the underfloor, ceiling and
/// outside through walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Unordered room pairs (0-based) sharing a wall or an open door.
    pub links: Vec<(usize, usize, Contact)>,
}

impl Default for Topology {
    /// Two rows of four rooms, left to right:
    ///
    /// ```text
    /// 1 | 3 | 5 | 7
    /// --+---+---+--
    /// 2 | 4 | 6 | 8
    /// ```
    ///
    /// with open doors 1–3, 4–6 and 7–8 and walls everywhere else. Every subsystem groups
    /// adjacent rooms; the fully controlled pairs are joined by doors. Opening 2–4 or 5–6 as
    /// well makes room 6 too sensitive to its unobserved neighbours for the `{4, 6}`
    /// subsystem to be realizable at refinement depth 6.
    fn default() -> Self {
        use Contact::{Door, Wall};
        Self {
            links: vec![
                (0, 2, Door),
                (3, 5, Door),
                (6, 7, Door),
                (0, 1, Wall),
                (1, 3, Wall),
                (2, 3, Wall),
                (2, 4, Wall),
                (4, 5, Wall),
                (4, 6, Wall),
                (5, 7, Wall),
            ],
        }
    }
}

impl Topology {
    pub fn validate(&self) -> Result<(), UfadError> {
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b, _) in &self.links {
            if a >= ROOMS {
                return Err(UfadError::BadRoom(a));
            }
            if b >= ROOMS {
                return Err(UfadError::BadRoom(b));
            }
            if a == b {
                return Err(UfadError::SelfLink(a));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(UfadError::DuplicateLink(a, b));
            }
        }
        Ok(())
    }

    /// Symmetric coupling matrix between rooms.
    pub fn coupling(&self, a_wall: f64, a_door: f64) -> [[f64; ROOMS]; ROOMS] {
        let mut m = [[0.0; ROOMS]; ROOMS];
        for &(a, b, contact) in &self.links {
            let v = match contact {
                Contact::Wall => a_wall,
                Contact::Door => a_door,
            };
            m[a][b] = v;
            m[b][a] = v;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UfadParams {
    /// 1/s
    pub a_wall: f64,
    /// 1/s
    pub a_door: f64,
    /// 1/s
    pub b: f64,
    /// 1/(s·K³)
    pub c: f64,
    /// °C
    pub body_temperature: f64,
    /// `T_u` bounds, °C
    pub underfloor: [f64; 2],
    /// `T_c` bounds, °C
    pub ceiling: [f64; 2],
    /// `T_o` bounds, °C
    pub outside: [f64; 2],
    /// Share of `u₆` and `u₈` in room 6's ventilation.
    pub room6_mix: [f64; 2],
    /// State bounds on every room, °C
    pub temperature: [f64; 2],
    pub topology: Topology,
}

impl Default for UfadParams {
    fn default() -> Self {
        Self {
            a_wall: 1e-5,
            a_door: 3e-5,
            b: 2e-4,
            c: 1e-13,
            body_temperature: 37.0,
            underfloor: [15.0, 16.0],
            ceiling: [26.0, 28.0],
            outside: [28.0, 30.0],
            room6_mix: [0.75, 0.25],
            temperature: [20.0, 30.0],
            topology: Topology::default(),
        }
    }
}

impl UfadParams {
    /// Radiation gain `c T_b⁴` in K/s.
    pub fn body_radiation(&self) -> f64 {
        self.c * (self.body_temperature + KELVIN).powi(4)
    }
}

/// The eight-room model as a monotone continuous-time system over `X = temperature⁸`,
/// `U = [−1, 0]⁸` and `W = T_u × T_c × T_o`.
///
/// Every partial derivative used by the over-approximation is non-negative: off-diagonal
/// couplings are conduction gains, `∂f_i/∂u_i = b (T_i − T_u) > 0` as long as rooms stay
/// warmer than the underfloor, and `∂f_i/∂T_u = a − u_i b ≥ 0`. The sign check fails when the
/// configured temperatures overlap the underfloor range.
pub fn ufad_system<S: Scalar>(params: &UfadParams) -> Result<ControlSystem<S>, UfadError> {
    params.topology.validate()?;
    let [m6, m8] = params.room6_mix;
    if m6 < 0.0 || m8 < 0.0 || ((m6 + m8) - 1.0).abs() > 1e-12 {
        return Err(UfadError::BadMix);
    }
    let coupling = params.topology.coupling(params.a_wall, params.a_door);
    let a = params.a_wall;
    let b = params.b;
    let c = params.c;
    let tb4 = (params.body_temperature + KELVIN).powi(4);
    let field: VectorField<S> = Arc::new(move |x: &[S], u: &[S], w: &[S], out: &mut [S]| {
        let x: [f64; ROOMS] = std::array::from_fn(|i| x[i].as_f64());
        let u: [f64; ROOMS] = std::array::from_fn(|i| u[i].as_f64());
        let (tu, tc, to) = (w[0].as_f64(), w[1].as_f64(), w[2].as_f64());
        for i in 0..ROOMS {
            let ti = x[i];
            let mut d = a * (tu - ti) + a * (tc - ti) + a * (to - ti);
            for j in 0..ROOMS {
                d += coupling[i][j] * (x[j] - ti);
            }
            let vent = if i == 5 { m6 * u[5] + m8 * u[7] } else { u[i] };
            d += vent * b * (ti - tu);
            let tk = ti + KELVIN;
            d += c * (tb4 - tk * tk * tk * tk);
            out[i] = S::lit(d);
        }
    });
    let [lo, hi] = params.temperature;
    let states = IntervalBox::uniform((0..ROOMS).collect(), S::lit(lo), S::lit(hi))?;
    let controls = IntervalBox::uniform((0..ROOMS).collect(), S::lit(-1.0), S::lit(0.0))?;
    let disturbances = IntervalBox::from_bounds(
        vec![S::lit(params.underfloor[0]), S::lit(params.ceiling[0]), S::lit(params.outside[0])],
        vec![S::lit(params.underfloor[1]), S::lit(params.ceiling[1]), S::lit(params.outside[1])],
    )?;
    Ok(ControlSystem::continuous(field, states, controls, disturbances, Monotonicity::all_increasing(ROOMS, ROOMS, 3))?)
}

/// The five-subsystem decomposition (0-based):
/// `{1,3}`, `{4,6}`, `{7,8}` fully controlled, `{2}` observing 4 and `{5}` observing 6.
pub fn ufad_decomposition() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::new(0, &[0, 2], &[], &[0, 2]),
        SubsystemSpec::new(1, &[3, 5], &[], &[3, 5]),
        SubsystemSpec::new(2, &[6, 7], &[], &[6, 7]),
        SubsystemSpec::new(3, &[1], &[3], &[1]),
        SubsystemSpec::new(4, &[4], &[5], &[4]),
    ]
}

/// Cell coordinates (0 = `[20,22]` … 4 = `[28,30]`) of the temperature-gradient schedule
/// `σ⁰ … σ⁴`, room by room.
pub fn ufad_schedule() -> Vec<Vec<usize>> {
    vec![
        vec![4; 8],
        vec![4, 4, 4, 4, 4, 4, 3, 3],
        vec![4, 4, 4, 4, 3, 3, 2, 2],
        vec![4, 4, 3, 3, 2, 2, 1, 1],
        vec![3, 3, 2, 2, 1, 1, 0, 0],
    ]
}

pub const CONTROL_LEVELS: [f64; 5] = [-1.0, -0.75, -0.5, -0.25, 0.0];

/// Numerical settings of the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UfadSettings {
    /// Sampling period, s.
    pub tau: f64,
    /// RK4 steps per sampling period.
    pub integrator_steps: usize,
    pub cells_per_dim: usize,
    pub arity: usize,
    pub control_levels: Vec<f64>,
}

impl Default for UfadSettings {
    fn default() -> Self {
        Self { tau: 1800.0, integrator_steps: 60, cells_per_dim: 5, arity: 2, control_levels: CONTROL_LEVELS.to_vec() }
    }
}

/// Builds the benchmark problem: grid, schedule, decomposition and control sets.
pub fn ufad_problem<S: Scalar>(params: &UfadParams, settings: &UfadSettings) -> Result<Problem<S>, UfadError> {
    let system = Arc::new(ufad_system::<S>(params)?);
    let grid = Arc::new(GridPartition::uniform(system.state_bounds().clone(), &[settings.cells_per_dim; ROOMS])?);
    let sequence = Arc::new(CellSequence::from_coords(grid, &ufad_schedule())?);
    let evaluator = Arc::new(ReachEvaluator::new(system, S::lit(settings.tau), settings.integrator_steps));
    let levels: Vec<S> = settings.control_levels.iter().map(|&v| S::lit(v)).collect();
    let subsystems = ufad_decomposition();
    let control_values = subsystems.iter().map(|s| control_grid(s.controls.len(), &levels)).collect();
    Ok(Problem { evaluator, sequence, subsystems, control_values, arity: settings.arity })
}

/// Reach-set evaluation counts of the four abstraction strategies.
///
/// Only the compositional-refinement entry is measured; the other three come from counting
/// formulas at the finest uniform partition reached by refinement, where every base cell is
/// split into `arity^depth` intervals per dimension:
///
/// * compositional, no refinement: `Σ_i (cells·arity^depth)^{|I_i|} · |U_i|`;
/// * centralized, no refinement: `(cells·arity^depth)^n · |U|`;
/// * centralized refinement (upper bound, every control tried on every symbol of every
///   refinement level of every non-final step): `r · |U| · Σ_{l=0}^{depth} arity^{n·l}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub compositional_refinement: Option<u64>,
    pub compositional_abstraction: f64,
    pub centralized_abstraction: f64,
    pub centralized_refinement: f64,
    pub finest_depth: usize,
    pub formulas: Vec<String>,
}

/// Inputs of the counting formulas.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingInputs {
    pub n: usize,
    pub cells_per_dim: usize,
    pub arity: usize,
    pub finest_depth: usize,
    pub horizon: usize,
    /// `(|I_i|, |U_i|)` per subsystem.
    pub subsystems: Vec<(usize, usize)>,
    /// `|U|` of the undecomposed system.
    pub controls: f64,
}

impl CountingInputs {
    pub fn from_problem<S: Scalar>(problem: &Problem<S>, cells_per_dim: usize, finest_depth: usize) -> Self {
        let subsystems: Vec<(usize, usize)> =
            problem.subsystems.iter().zip(&problem.control_values).map(|(s, u)| (s.modeled().len(), u.len())).collect();
        Self {
            n: problem.evaluator.system().n(),
            cells_per_dim,
            arity: problem.arity,
            finest_depth,
            horizon: problem.sequence.horizon(),
            controls: subsystems.iter().map(|&(_, u)| u as f64).product(),
            subsystems,
        }
    }
}

pub fn table1(inputs: &CountingInputs, measured: Option<u64>) -> Table1 {
    let per_dim = inputs.cells_per_dim as f64 * (inputs.arity as f64).powi(inputs.finest_depth as i32);
    let compositional_abstraction =
        inputs.subsystems.iter().map(|&(dims, u)| per_dim.powi(dims as i32) * u as f64).sum::<f64>();
    let centralized_abstraction = per_dim.powi(inputs.n as i32) * inputs.controls;
    let fan = (inputs.arity as f64).powi(inputs.n as i32);
    let levels: f64 = (0..=inputs.finest_depth).map(|l| fan.powi(l as i32)).sum();
    let centralized_refinement = inputs.horizon as f64 * inputs.controls * levels;
    Table1 {
        compositional_refinement: measured,
        compositional_abstraction,
        centralized_abstraction,
        centralized_refinement,
        finest_depth: inputs.finest_depth,
        formulas: vec![
            "compositional abstraction = sum_i (cells*arity^depth)^|I_i| * |U_i|".into(),
            "centralized abstraction = (cells*arity^depth)^n * |U|".into(),
            "centralized refinement <= r * |U| * sum_{l=0..depth} arity^(n*l)".into(),
        ],
    }
}
