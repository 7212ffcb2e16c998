use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsError;
use crate::geometry::IntervalBox;
use crate::Scalar;

/// `(x, u, w, out)`: writes the vector field (or the successor, for discrete maps) into `out`.
pub type VectorField<S> = Arc<dyn Fn(&[S], &[S], &[S], &mut [S]) + Send + Sync>;

/// Declared sign of the partial derivatives with respect to one argument coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Increasing,
    Decreasing,
    Independent,
}

impl Sign {
    fn admits(self, derivative: f64, tol: f64) -> bool {
        match self {
            Sign::Increasing => derivative >= -tol,
            Sign::Decreasing => derivative <= tol,
            Sign::Independent => derivative.abs() <= tol,
        }
    }
}

/// Per-coordinate monotonicity signs of `f` in its state, control and disturbance arguments.
///
/// State signs describe the off-diagonal couplings `∂f_i/∂x_j, i ≠ j` of a continuous-time
/// field (and every coupling of a discrete map). Only cooperative state couplings are
/// supported, so state signs may not be `Decreasing`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monotonicity {
    pub state: Vec<Sign>,
    pub control: Vec<Sign>,
    pub disturbance: Vec<Sign>,
}

impl Monotonicity {
    pub fn all_increasing(n: usize, p: usize, q: usize) -> Self {
        Self {
            state: vec![Sign::Increasing; n],
            control: vec![Sign::Increasing; p],
            disturbance: vec![Sign::Increasing; q],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeModel {
    /// `ẋ = f(x, u, w)`, integrated over the sampling period.
    Continuous,
    /// `x⁺ = F(x, u, w)`; one application per sampling period.
    Discrete,
}

/// Which argument of `f` a monotonicity check concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Argument {
    State,
    Control,
    Disturbance,
}

impl fmt::Display for Argument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Argument::State => "state",
            Argument::Control => "control",
            Argument::Disturbance => "disturbance",
        })
    }
}

/// Monotone control system with bounded state, control and disturbance sets.
#[derive(Clone)]
pub struct ControlSystem<S> {
    field: VectorField<S>,
    time: TimeModel,
    states: IntervalBox<S>,
    controls: IntervalBox<S>,
    disturbances: IntervalBox<S>,
    mono: Monotonicity,
}

/// Number of random points used to validate the declared monotonicity signs.
pub const MONOTONICITY_SAMPLES: usize = 100;
const VALIDATION_SEED: u64 = 0x6d6f_6e6f;

impl<S: Scalar> ControlSystem<S> {
    /// Builds a system after checking the declared signs by central finite differences at
    /// [`MONOTONICITY_SAMPLES`] random points of `X × U × W`.
    pub fn new(
        time: TimeModel,
        field: VectorField<S>,
        states: IntervalBox<S>,
        controls: IntervalBox<S>,
        disturbances: IntervalBox<S>,
        mono: Monotonicity,
    ) -> Result<Self, DynamicsError> {
        let (n, p, q) = (states.dim_count(), controls.dim_count(), disturbances.dim_count());
        for (b, k) in [(&states, n), (&controls, p), (&disturbances, q)] {
            if b.dims() != (0..k).collect::<Vec<_>>().as_slice() {
                return Err(DynamicsError::DimensionMismatch("bounds must cover dims 0..len in order"));
            }
        }
        if mono.state.len() != n || mono.control.len() != p || mono.disturbance.len() != q {
            return Err(DynamicsError::DimensionMismatch("one sign per argument coordinate"));
        }
        if let Some(j) = mono.state.iter().position(|&s| s == Sign::Decreasing) {
            return Err(DynamicsError::UnsupportedStateSign(j));
        }
        let sys = Self { field, time, states, controls, disturbances, mono };
        sys.validate_signs()?;
        Ok(sys)
    }

    pub fn continuous(
        field: VectorField<S>,
        states: IntervalBox<S>,
        controls: IntervalBox<S>,
        disturbances: IntervalBox<S>,
        mono: Monotonicity,
    ) -> Result<Self, DynamicsError> {
        Self::new(TimeModel::Continuous, field, states, controls, disturbances, mono)
    }

    pub fn discrete(
        map: VectorField<S>,
        states: IntervalBox<S>,
        controls: IntervalBox<S>,
        disturbances: IntervalBox<S>,
        mono: Monotonicity,
    ) -> Result<Self, DynamicsError> {
        Self::new(TimeModel::Discrete, map, states, controls, disturbances, mono)
    }

    pub fn n(&self) -> usize {
        self.states.dim_count()
    }

    pub fn p(&self) -> usize {
        self.controls.dim_count()
    }

    pub fn q(&self) -> usize {
        self.disturbances.dim_count()
    }

    pub fn time_model(&self) -> TimeModel {
        self.time
    }

    pub fn state_bounds(&self) -> &IntervalBox<S> {
        &self.states
    }

    pub fn control_bounds(&self) -> &IntervalBox<S> {
        &self.controls
    }

    pub fn disturbance_bounds(&self) -> &IntervalBox<S> {
        &self.disturbances
    }

    pub fn monotonicity(&self) -> &Monotonicity {
        &self.mono
    }

    /// Evaluates `f(x, u, w)` into `out`.
    #[inline]
    pub fn eval(&self, x: &[S], u: &[S], w: &[S], out: &mut [S]) {
        (self.field)(x, u, w, out)
    }

    fn validate_signs(&self) -> Result<(), DynamicsError> {
        let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
        let n = self.n();
        // (argument, coordinate, output, derivative)
        let mut samples: Vec<(Argument, usize, usize, f64)> = Vec::new();
        let mut f_plus = vec![S::zero(); n];
        let mut f_minus = vec![S::zero(); n];
        for _ in 0..MONOTONICITY_SAMPLES {
            let x = uniform_point(&mut rng, &self.states);
            let u = uniform_point(&mut rng, &self.controls);
            let w = uniform_point(&mut rng, &self.disturbances);
            for arg in [Argument::State, Argument::Control, Argument::Disturbance] {
                let (base, bounds) = match arg {
                    Argument::State => (&x, &self.states),
                    Argument::Control => (&u, &self.controls),
                    Argument::Disturbance => (&w, &self.disturbances),
                };
                for j in 0..base.len() {
                    let width = bounds.width(j).as_f64();
                    let h = if width > 0.0 { width * 1e-4 } else { 1e-6 };
                    let lo = (base[j].as_f64() - h).max(bounds.low()[j].as_f64());
                    let hi = (base[j].as_f64() + h).min(bounds.high()[j].as_f64());
                    if !(hi > lo) {
                        continue;
                    }
                    let mut plus = base.clone();
                    let mut minus = base.clone();
                    plus[j] = S::lit(hi);
                    minus[j] = S::lit(lo);
                    let eval = |v: &[S], out: &mut [S]| match arg {
                        Argument::State => self.eval(v, &u, &w, out),
                        Argument::Control => self.eval(&x, v, &w, out),
                        Argument::Disturbance => self.eval(&x, &u, v, out),
                    };
                    eval(&plus, &mut f_plus);
                    eval(&minus, &mut f_minus);
                    let step = plus[j].as_f64() - minus[j].as_f64();
                    for i in 0..n {
                        if arg == Argument::State && i == j && self.time == TimeModel::Continuous {
                            continue;
                        }
                        let d = (f_plus[i].as_f64() - f_minus[i].as_f64()) / step;
                        if !d.is_finite() {
                            return Err(DynamicsError::NonFinite);
                        }
                        samples.push((arg, j, i, d));
                    }
                }
            }
        }
        let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.3.abs()));
        let tol = scale * 10.0 * S::epsilon().as_f64().sqrt();
        for &(arg, j, i, d) in &samples {
            let sign = match arg {
                Argument::State => self.mono.state[j],
                Argument::Control => self.mono.control[j],
                Argument::Disturbance => self.mono.disturbance[j],
            };
            if !sign.admits(d, tol) {
                return Err(DynamicsError::Monotonicity { argument: arg, coordinate: j, output: i, derivative: d });
            }
        }
        Ok(())
    }
}

impl<S: fmt::Debug> fmt::Debug for ControlSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("time", &self.time)
            .field("states", &self.states)
            .field("controls", &self.controls)
            .field("disturbances", &self.disturbances)
            .field("mono", &self.mono)
            .finish_non_exhaustive()
    }
}

/// Uniform random point of a box.
pub fn uniform_point<S: Scalar, R: Rng + ?Sized>(rng: &mut R, b: &IntervalBox<S>) -> Vec<S> {
    (0..b.dim_count())
        .map(|p| {
            let t: f64 = rng.random();
            let v = b.low()[p] + b.width(p) * S::lit(t);
            v.min(b.high()[p])
        })
        .collect()
}
