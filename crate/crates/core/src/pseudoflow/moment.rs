//! Shifted `|z_k + s|^β` moments of the bubble kernel, reduced to one
//! dimension by integrating out the other `n-1` coordinates:
//! `∫_{ℝ^{n-1}} (1+t²+|w|²)^{-m} dw = C_m (1+t²)^{-(m-(n-1)/2)}`.

use std::collections::HashMap;
use std::sync::Mutex;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numerics::{integrate_half_line, integrate_interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentKind {
    /// `∫ |z_k+s|^β z_k (1+|z|²)^{-(n+1)}`, the translation moment.
    Translation,
    /// `∫ |z_k+s|^β (|z|²-1) (1+|z|²)^{-(n+1)}`, the dilation moment.
    Dilation,
}

fn marginal(n: usize, m: f64) -> (f64, f64) {
    let h = (n as f64 - 1.0) / 2.0;
    let c = (h * std::f64::consts::PI.ln() + ln_gamma(m - h) - ln_gamma(m)).exp();
    (c, m - h)
}

fn compute(n: usize, beta: f64, s: f64, kind: MomentKind) -> Result<f64> {
    let nf = n as f64;
    let (c1, e1) = marginal(n, nf + 1.0);
    let (c0, e0) = marginal(n, nf);
    let kernel = |t: f64| -> f64 {
        let w = 1.0 + t * t;
        match kind {
            MomentKind::Translation => t * c1 * w.powf(-e1),
            MomentKind::Dilation => c0 * w.powf(-e0) - 2.0 * c1 * w.powf(-e1),
        }
    };
    let limit = match kind {
        MomentKind::Translation => nf + 1.0,
        MomentKind::Dilation => nf,
    };
    if !(beta < limit) {
        return Err(Error::DivergentIntegral(format!("shifted moment diverges for beta = {beta} >= {limit}")));
    }
    // Break at the kink t = -s and at the kernel's peak t = 0; for large
    // `s` these are far apart and a single mapped half-line misses the peak.
    let f = |t: f64| (t + s).abs().powf(beta) * kernel(t);
    let (lo, hi) = if s > 0.0 { (-s, 0.0) } else { (0.0, -s) };
    let (rel, abs) = (1e-12, 1e-15);
    let left = integrate_half_line(|x: f64| f(-x), -lo, rel, abs, 16)?;
    let middle = if hi > lo { integrate_interval(f, lo, hi, rel, abs, 16)? } else { 0.0 };
    let right = integrate_half_line(f, hi, rel, abs, 16)?;
    Ok(left + middle + right)
}

/// Memoized moments keyed on `(n, β, s)`.
#[derive(Debug, Default)]
pub struct MomentCache {
    table: Mutex<HashMap<(MomentKind, usize, u64, u64), f64>>,
}

impl MomentCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, kind: MomentKind, n: usize, beta: f64, s: f64) -> Result<f64> {
        if kind == MomentKind::Translation && s == 0.0 {
            return Ok(0.0);
        }
        let key = (kind, n, beta.to_bits(), s.to_bits());
        if let Some(v) = self.table.lock().expect("moment table poisoned").get(&key) {
            return Ok(*v);
        }
        let v = compute(n, beta, s, kind)?;
        self.table.lock().expect("moment table poisoned").insert(key, v);
        Ok(v)
    }

    pub fn translation(&self, n: usize, beta: f64, s: f64) -> Result<f64> {
        self.get(MomentKind::Translation, n, beta, s)
    }

    pub fn dilation(&self, n: usize, beta: f64, s: f64) -> Result<f64> {
        self.get(MomentKind::Dilation, n, beta, s)
    }

    pub fn len(&self) -> usize {
        self.table.lock().expect("moment table poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
