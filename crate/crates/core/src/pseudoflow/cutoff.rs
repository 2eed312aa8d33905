//! Plateau cut-offs with quintic (C²) transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CutoffParams<T = f64> {
    /// Width parameter of the three scale cut-offs.
    pub delta: T,
    /// Lower plateau edge of the ratio cut-off `ψ`.
    pub gamma: T,
}

impl<T: Real> Default for CutoffParams<T> {
    fn default() -> Self {
        Self { delta: T::lit(0.2), gamma: T::lit(0.5) }
    }
}

impl<T: Real> CutoffParams<T> {
    pub fn validate(&self) -> Result<()> {
        let inside = |v: T| v > T::zero() && v < T::one();
        if !inside(self.delta) || !inside(self.gamma) {
            return Err(Error::Config("cut-off delta and gamma must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffValues<T = f64> {
    /// 1 near zero, 0 past `δ`.
    pub theta1: T,
    /// 1 on `[δ/2, 1/δ]`, 0 below `δ/4` and past `2/δ`.
    pub theta2: T,
    /// 1 past `1/δ`, 0 below `1/(2δ)`.
    pub theta3: T,
    /// 1 past 1, 0 below `γ`.
    pub psi: T,
}

/// `x³(10 - 15x + 6x²)` clamped to `[0, 1]`.
pub fn smoothstep<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        x * x * x * (T::lit(10.0) - T::lit(15.0) * x + T::lit(6.0) * x * x)
    }
}

/// 0 at or below `lo`, 1 at or above `hi`.
pub fn ramp<T: Real>(t: T, lo: T, hi: T) -> T {
    smoothstep((t - lo) / (hi - lo))
}

pub fn cutoffs<T: Real>(params: &CutoffParams<T>, t: T) -> CutoffValues<T> {
    let t = t.abs();
    let d = params.delta;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    CutoffValues {
        theta1: T::one() - ramp(t, d * half, d),
        theta2: ramp(t, d / T::lit(4.0), d * half) * (T::one() - ramp(t, T::one() / d, two / d)),
        theta3: ramp(t, half / d, T::one() / d),
        psi: ramp(t, params.gamma, T::one()),
    }
}
