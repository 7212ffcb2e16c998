use std::sync::Arc;

use crate::dynamics::{ControlSystem, DynamicsError, Monotonicity, Sign, TimeModel};
use crate::geometry::IntervalBox;
use crate::Scalar;

/// `ẋ = A x + B u + E w + c` (or `x⁺ = …` for discrete time), row-major matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<Vec<S>>,
    pub e: Vec<Vec<S>>,
    pub c: Vec<S>,
}

impl<S: Scalar> Affine<S> {
    fn column_sign(m: &[Vec<S>], j: usize, skip_row: Option<usize>) -> Option<Sign> {
        let mut pos = false;
        let mut neg = false;
        for (i, row) in m.iter().enumerate() {
            if Some(i) == skip_row {
                continue;
            }
            pos |= row[j] > S::zero();
            neg |= row[j] < S::zero();
        }
        match (pos, neg) {
            (true, true) => None,
            (true, false) => Some(Sign::Increasing),
            (false, true) => Some(Sign::Decreasing),
            (false, false) => Some(Sign::Independent),
        }
    }

    /// Builds the system, deriving the monotonicity signs from the matrix entries.
    pub fn into_system(
        self,
        time: TimeModel,
        states: IntervalBox<S>,
        controls: IntervalBox<S>,
        disturbances: IntervalBox<S>,
    ) -> Result<ControlSystem<S>, DynamicsError> {
        let (n, p, q) = (states.dim_count(), controls.dim_count(), disturbances.dim_count());
        let shape_ok = self.a.len() == n
            && self.b.len() == n
            && self.e.len() == n
            && self.c.len() == n
            && self.a.iter().all(|r| r.len() == n)
            && self.b.iter().all(|r| r.len() == p)
            && self.e.iter().all(|r| r.len() == q);
        if !shape_ok {
            return Err(DynamicsError::DimensionMismatch("affine matrices do not match the bounds"));
        }
        let mut state = Vec::with_capacity(n);
        for j in 0..n {
            let skip = (time == TimeModel::Continuous).then_some(j);
            match Self::column_sign(&self.a, j, skip) {
                Some(Sign::Decreasing) | None => return Err(DynamicsError::UnsupportedStateSign(j)),
                Some(s) => state.push(s),
            }
        }
        let signs = |m: &[Vec<S>], k: usize, arg| -> Result<Vec<Sign>, DynamicsError> {
            (0..k)
                .map(|j| {
                    Self::column_sign(m, j, None).ok_or(DynamicsError::Monotonicity {
                        argument: arg,
                        coordinate: j,
                        output: 0,
                        derivative: f64::NAN,
                    })
                })
                .collect()
        };
        let mono = Monotonicity {
            state,
            control: signs(&self.b, p, crate::dynamics::Argument::Control)?,
            disturbance: signs(&self.e, q, crate::dynamics::Argument::Disturbance)?,
        };
        let field = move |x: &[S], u: &[S], w: &[S], out: &mut [S]| {
            for i in 0..out.len() {
                let mut v = self.c[i];
                for (j, &xj) in x.iter().enumerate() {
                    v = v + self.a[i][j] * xj;
                }
                for (j, &uj) in u.iter().enumerate() {
                    v = v + self.b[i][j] * uj;
                }
                for (j, &wj) in w.iter().enumerate() {
                    v = v + self.e[i][j] * wj;
                }
                out[i] = v;
            }
        };
        ControlSystem::new(time, Arc::new(field), states, controls, disturbances, mono)
    }
}
