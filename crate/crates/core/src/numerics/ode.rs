//! Dormand–Prince 5(4) with step rejection.
//!
//! The fields we integrate are only piecewise smooth, so every rejected
//! step at least halves the step size; the error estimate alone is not
//! trusted across a kink.

use serde::{Deserialize, Serialize};

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeControl<T> {
    pub initial_step: T,
    pub max_step: T,
    pub rel_tol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeControl<T> {
    fn default() -> Self {
        Self { initial_step: T::lit(1e-2), max_step: T::lit(0.5), rel_tol: T::lit(1e-6), max_steps: 2000 }
    }
}

impl<T: Real> OdeControl<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.initial_step) || !pos(self.max_step) || !pos(self.rel_tol) {
            return Err(Error::Config("ode steps and tolerance must be positive".into()));
        }
        if self.initial_step > self.max_step {
            return Err(Error::Config("initial-step exceeds max-step".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max-steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    PredicateHit,
    MaxSteps,
    /// The step size fell below resolution without an acceptable step.
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
    pub stop: StopReason,
    pub rejected: usize,
}

impl<T> Trajectory<T> {
    pub fn last(&self) -> &[T] {
        self.states.last().expect("trajectory holds the initial state")
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `x' = field(x)` from `state0` until `stop(t, x)` holds or the
/// step budget runs out.
pub fn ode_integrate<T, F, S>(state0: &[T], field: F, ctrl: &OdeControl<T>, stop: S) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
    S: FnMut(T, &[T]) -> bool,
{
    ode_integrate_guarded(state0, field, ctrl, |_, _| true, stop)
}

/// As [`ode_integrate`], but a step that passes the error test is still
/// rejected (and the step halved) when `accept(old, new)` is false.
pub fn ode_integrate_guarded<T, F, G, S>(
    state0: &[T],
    mut field: F,
    ctrl: &OdeControl<T>,
    mut accept: G,
    mut stop: S,
) -> Result<Trajectory<T>>
where
    T: Real,
    F: FnMut(&[T]) -> Result<Vec<T>>,
    G: FnMut(&[T], &[T]) -> bool,
    S: FnMut(T, &[T]) -> bool,
{
    ctrl.validate()?;
    let dim = state0.len();
    let mut eval = |x: &[T]| -> Result<Vec<T>> {
        let v = field(x)?;
        if v.len() != dim {
            return Err(Error::FieldEvaluation(f64::NAN));
        }
        if let Some(bad) = v.iter().find(|c| !c.is_finite()) {
            return Err(Error::FieldEvaluation(bad.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(v)
    };

    let mut traj = Trajectory { times: vec![T::zero()], states: vec![state0.to_vec()], stop: StopReason::MaxSteps, rejected: 0 };
    if stop(T::zero(), state0) {
        traj.stop = StopReason::PredicateHit;
        return Ok(traj);
    }

    let mut t = T::zero();
    let mut x = state0.to_vec();
    let mut h = ctrl.initial_step;
    let mut k0 = eval(&x)?;
    let atol = ctrl.rel_tol * T::lit(1e-3);
    let mut stage = vec![T::zero(); dim];
    let mut accepted = 0usize;

    while accepted < ctrl.max_steps {
        let mut k: Vec<Vec<T>> = Vec::with_capacity(7);
        k.push(k0.clone());
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = x[i];
                for (j, kj) in k.iter().enumerate() {
                    acc = acc + h * T::lit(A[s][j]) * kj[i];
                }
                stage[i] = acc;
            }
            k.push(eval(&stage)?);
        }
        // The last stage was evaluated at the 5th-order solution (FSAL).
        let new = stage.clone();
        let mut err = T::zero();
        for i in 0..dim {
            let mut e = T::zero();
            for s in 0..7 {
                e = e + h * T::lit(B5[s] - B4[s]) * k[s][i];
            }
            let sc = atol + ctrl.rel_tol * x[i].abs().max(new[i].abs());
            err = err.max((e / sc).abs());
        }
        let ok = err <= T::one() && accept(&x, &new);
        if ok {
            t = t + h;
            x = new;
            k0 = k.pop().expect("seven stages");
            accepted += 1;
            traj.times.push(t);
            traj.states.push(x.clone());
            if stop(t, &x) {
                traj.stop = StopReason::PredicateHit;
                return Ok(traj);
            }
            let grow = if err == T::zero() { T::lit(5.0) } else { (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)) };
            h = (h * grow.max(T::one())).min(ctrl.max_step);
        } else {
            traj.rejected += 1;
            let shrink = if err > T::one() { (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1)) } else { T::one() };
            h = h * shrink.min(T::lit(0.5));
            if h <= T::epsilon() * T::lit(16.0) * t.abs().max(T::one()) {
                traj.stop = StopReason::StepUnderflow;
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}
