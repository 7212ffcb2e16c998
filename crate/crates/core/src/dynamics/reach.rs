use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::Rng;

use crate::dynamics::system::uniform_point;
use crate::dynamics::{ControlSystem, DynamicsError, Sign, TimeModel};
use crate::geometry::IntervalBox;
use crate::Scalar;

/// Disturbance input over one sampling period.
#[derive(Clone, Copy, Debug)]
pub enum Disturbance<'a, S> {
    Constant(&'a [S]),
    /// One value per integrator step (piecewise constant).
    PerStep(&'a [Vec<S>]),
}

impl<S> Disturbance<'_, S> {
    fn at(&self, step: usize) -> &[S] {
        match self {
            Disturbance::Constant(w) => w,
            Disturbance::PerStep(ws) => &ws[step],
        }
    }
}

/// Fixed-step RK4 approximation of the flow `Φ(τ, x0, u, w)`; a single map application for
/// discrete-time systems.
///
/// Fails with [`DynamicsError::Diverged`] when the state leaves the guard box, which is `X`
/// inflated to twice its width around its center.
pub fn integrate<S: Scalar>(
    sys: &ControlSystem<S>,
    x0: &[S],
    u: &[S],
    w: Disturbance<'_, S>,
    tau: S,
    steps: usize,
) -> Result<Vec<S>, DynamicsError> {
    let n = sys.n();
    if x0.len() != n || u.len() != sys.p() {
        return Err(DynamicsError::DimensionMismatch("integrate: point sizes"));
    }
    let effective_steps = match sys.time_model() {
        TimeModel::Continuous => steps.max(1),
        TimeModel::Discrete => 1,
    };
    if let Disturbance::PerStep(ws) = w {
        if ws.len() < effective_steps {
            return Err(DynamicsError::DimensionMismatch("one disturbance value per integrator step"));
        }
    }
    let mut x = x0.to_vec();
    if sys.time_model() == TimeModel::Discrete {
        let mut out = vec![S::zero(); n];
        sys.eval(&x, u, w.at(0), &mut out);
        check_guard(sys, &out)?;
        return Ok(out);
    }
    let h = tau / S::lit(effective_steps as f64);
    let half = h / S::lit(2.0);
    let sixth = h / S::lit(6.0);
    let two = S::lit(2.0);
    let mut k1 = vec![S::zero(); n];
    let mut k2 = vec![S::zero(); n];
    let mut k3 = vec![S::zero(); n];
    let mut k4 = vec![S::zero(); n];
    let mut tmp = vec![S::zero(); n];
    for step in 0..effective_steps {
        let ws = w.at(step);
        sys.eval(&x, u, ws, &mut k1);
        for i in 0..n {
            tmp[i] = x[i] + half * k1[i];
        }
        sys.eval(&tmp, u, ws, &mut k2);
        for i in 0..n {
            tmp[i] = x[i] + half * k2[i];
        }
        sys.eval(&tmp, u, ws, &mut k3);
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        sys.eval(&tmp, u, ws, &mut k4);
        for i in 0..n {
            x[i] = x[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
        }
        check_guard(sys, &x)?;
    }
    Ok(x)
}

fn check_guard<S: Scalar>(sys: &ControlSystem<S>, x: &[S]) -> Result<(), DynamicsError> {
    let b = sys.state_bounds();
    let two = S::lit(2.0);
    for (p, &v) in x.iter().enumerate() {
        let c = (b.low()[p] + b.high()[p]) / two;
        let w = b.width(p);
        if !v.is_finite() || v < c - w || v > c + w {
            return Err(DynamicsError::Diverged { dim: p, value: v.as_f64() });
        }
    }
    Ok(())
}

/// Reachable-set over-approximation engine for a monotone system at a fixed sampling period.
///
/// Counts every [`ReachEvaluator::over_reach`] call; the tally is shared across threads.
pub struct ReachEvaluator<S> {
    system: Arc<ControlSystem<S>>,
    tau: S,
    steps: usize,
    evaluations: AtomicU64,
}

impl<S: Scalar> ReachEvaluator<S> {
    pub fn new(system: Arc<ControlSystem<S>>, tau: S, steps: usize) -> Self {
        Self { system, tau, steps: steps.max(1), evaluations: AtomicU64::new(0) }
    }

    pub fn system(&self) -> &Arc<ControlSystem<S>> {
        &self.system
    }

    pub fn tau(&self) -> S {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of `over_reach` calls so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn integrate(&self, x0: &[S], u: &[S], w: Disturbance<'_, S>) -> Result<Vec<S>, DynamicsError> {
        integrate(&self.system, x0, u, w, self.tau, self.steps)
    }

    /// Box spanned by the flows of the lower and upper monotone corners of `X0 × U' × W`.
    pub fn over_reach(&self, x0: &IntervalBox<S>, u: &IntervalBox<S>) -> Result<IntervalBox<S>, DynamicsError> {
        self.evaluations.fetch_add(1, Ordering::Relaxed);
        let sys = &*self.system;
        if !x0.is_subset_of(sys.state_bounds()) {
            return Err(DynamicsError::OutsideBounds("initial set"));
        }
        if !u.is_subset_of(sys.control_bounds()) {
            return Err(DynamicsError::OutsideBounds("control set"));
        }
        let mono = sys.monotonicity();
        let w = sys.disturbance_bounds();
        let (x_lo, x_hi) = corners(x0, &mono.state);
        let (u_lo, u_hi) = corners(u, &mono.control);
        let (w_lo, w_hi) = corners(w, &mono.disturbance);
        let lo = self.integrate(&x_lo, &u_lo, Disturbance::Constant(&w_lo))?;
        let hi = self.integrate(&x_hi, &u_hi, Disturbance::Constant(&w_hi))?;
        // Corner flows are ordered for a monotone system; min/max only absorbs round-off.
        let low: Vec<S> = lo.iter().zip(&hi).map(|(&a, &b)| a.min(b)).collect();
        let high: Vec<S> = lo.iter().zip(&hi).map(|(&a, &b)| a.max(b)).collect();
        Ok(IntervalBox::from_bounds(low, high).expect("ordered corners"))
    }

    /// `count` flow endpoints from uniform `x0 ∈ X0`, `u ∈ U'` and a disturbance redrawn
    /// uniformly in `W` at every integrator step.
    pub fn sample_reach<R: Rng + ?Sized>(
        &self,
        x0: &IntervalBox<S>,
        u: &IntervalBox<S>,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<S>>, DynamicsError> {
        (0..count)
            .map(|_| {
                let x = uniform_point(rng, x0);
                let v = uniform_point(rng, u);
                let ws = self.random_disturbance(rng);
                self.integrate(&x, &v, Disturbance::PerStep(&ws))
            })
            .collect()
    }

    /// Piecewise-constant disturbance signal, one uniform draw per integrator step.
    pub fn random_disturbance<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<S>> {
        let w = self.system.disturbance_bounds();
        (0..self.steps).map(|_| uniform_point(rng, w)).collect()
    }
}

impl<S: std::fmt::Debug> std::fmt::Debug for ReachEvaluator<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReachEvaluator")
            .field("system", &self.system)
            .field("tau", &self.tau)
            .field("steps", &self.steps)
            .field("evaluations", &self.evaluations)
            .finish()
    }
}

fn corners<S: Scalar>(b: &IntervalBox<S>, signs: &[Sign]) -> (Vec<S>, Vec<S>) {
    signs
        .iter()
        .enumerate()
        .map(|(p, s)| match s {
            Sign::Decreasing => (b.high()[p], b.low()[p]),
            Sign::Increasing | Sign::Independent => (b.low()[p], b.high()[p]),
        })
        .unzip()
}
