//! Integration of the reduced pseudo-gradient flow.
//!
//! The ODE state is `(aᵢ, ln λᵢ)` per mass. The weights are not dynamic:
//! after every step they are projected onto the normalization
//! `J_q^{n/(n-4)} αᵢ^{8/(n-4)} K(aᵢ) = 1`, where `J_q = N/D^{2/q}` and so
//! `J_q^{n/(n-4)} = J`. `J` along the flow is then a
//! function of the centers and scales alone. A step is accepted only when
//! it lowers that `J`.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use super::field::{FlowContext, ReducedState};
use crate::bubble::{epsilon_ij, functional_j, Configuration, Mass};
use crate::error::{Error, Result};
use crate::numerics::{ode_integrate_guarded, StopReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Terminal {
    /// Every scale passed `λ-max` while the centers settled; `limit`
    /// lists the records the masses converge to.
    CriticalPointAtInfinity { limit: Vec<usize> },
    InteriorStationary,
    BudgetExhausted { detail: String },
    /// A mass left its patch, dropped below the concentration gauge, or
    /// interacts with another beyond it.
    RegionExit { mass: usize, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowSample {
    pub s: f64,
    pub j: f64,
    pub masses: Vec<Mass>,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowOutcome {
    pub records: Vec<usize>,
    pub samples: Vec<FlowSample>,
    pub terminal: Terminal,
    /// `J(s_k) - J(s_{k+1})` per accepted step.
    pub decrease: Vec<f64>,
    pub rejected: usize,
}

impl FlowOutcome {
    pub fn max_lambda(&self) -> f64 {
        self.samples.iter().flat_map(|s| s.masses.iter().map(|m| m.lambda)).fold(0.0, f64::max)
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.decrease.iter().all(|d| *d > 0.0)
    }
}

struct Progress {
    last_j: f64,
    pending: Option<(f64, Configuration)>,
    samples: Vec<FlowSample>,
    terminal: Option<Terminal>,
}

impl<'a> FlowContext<'a> {
    fn unpack(&self, x: &[f64], records: &[usize]) -> ReducedState {
        let n = self.n();
        let masses = x.chunks(n + 1).map(|c| Mass { alpha: 1.0, a: c[..n].to_vec(), lambda: c[n].exp() }).collect();
        ReducedState { config: Configuration { masses }, records: records.to_vec() }
    }

    /// `J` with the weights on the normalization, and those weights.
    pub fn normalized(&self, config: &Configuration) -> Result<(f64, Configuration)> {
        let nf = self.n() as f64;
        let mut c = config.clone();
        let mut ks = Vec::with_capacity(c.len());
        for m in c.masses.iter_mut() {
            let kv = self.k.value(&m.a);
            if !(kv > 0.0) {
                return Err(Error::Positivity(kv));
            }
            ks.push(kv);
            m.alpha = kv.powf(-(nf - 4.0) / 8.0);
        }
        let j = functional_j(self.domain, self.k, &c, &self.spec)?;
        for (m, kv) in c.masses.iter_mut().zip(ks) {
            m.alpha = (j * kv).powf(-(nf - 4.0) / 8.0);
        }
        Ok((j, c))
    }

    /// Membership in the neighbourhood the fields are built for.
    pub fn check_start(&self, state: &ReducedState) -> Result<()> {
        state.config.validate(self.domain)?;
        state.check(self.k)?;
        let eps = self.params.epsilon;
        if let Some(i) = state.config.masses.iter().position(|m| m.lambda < 1.0 / eps) {
            return Err(Error::Config(format!("mass {i}: lambda below 1/epsilon = {}", 1.0 / eps)));
        }
        let e = state.config.max_epsilon(self.n());
        if e >= eps {
            return Err(Error::Config(format!("interaction {e:.3e} is not below epsilon = {eps}")));
        }
        Ok(())
    }

    pub fn flow(&self, start: &ReducedState) -> Result<FlowOutcome> {
        self.check_start(start)?;
        let n = self.n();
        let records = start.records.clone();
        let x0: Vec<f64> = start.config.masses.iter().flat_map(|m| m.a.iter().copied().chain([m.lambda.ln()])).collect();
        let (j0, c0) = self.normalized(&start.config)?;
        let region0 = self.field(start)?.region;
        let progress = RefCell::new(Progress {
            last_j: j0,
            pending: None,
            samples: vec![FlowSample { s: 0.0, j: j0, masses: c0.masses, region: region0 }],
            terminal: None,
        });

        let field = |x: &[f64]| -> Result<Vec<f64>> {
            let st = self.unpack(x, &records);
            let t = self.field_unchecked(&st)?;
            Ok(st.config.masses.iter().enumerate().flat_map(|(i, m)| t.d_a[i].iter().copied().chain([t.d_lambda[i] / m.lambda])).collect())
        };
        let accept = |_: &[f64], new: &[f64]| -> bool {
            let st = self.unpack(new, &records);
            let mut p = progress.borrow_mut();
            match self.normalized(&st.config) {
                Ok((j, c)) if j < p.last_j => {
                    p.pending = Some((j, c));
                    true
                }
                _ => false,
            }
        };
        let stop = |s: f64, x: &[f64]| -> bool {
            let st = self.unpack(x, &records);
            let mut p = progress.borrow_mut();
            if let Some((j, c)) = p.pending.take() {
                let region = self.field_unchecked(&st).map(|t| t.region).unwrap_or_default();
                p.last_j = j;
                p.samples.push(FlowSample { s, j, masses: c.masses, region });
            }
            let terminal = self.classify_sample(&st, &p.samples);
            p.terminal = terminal;
            p.terminal.is_some()
        };
        let traj = ode_integrate_guarded(&x0, field, &self.params.ode, accept, stop)?;
        let p = progress.into_inner();
        let terminal = match (p.terminal, traj.stop) {
            (Some(t), _) => t,
            (None, StopReason::MaxSteps) => Terminal::BudgetExhausted { detail: format!("{} accepted steps", self.params.ode.max_steps) },
            (None, _) => Terminal::BudgetExhausted { detail: "step size underflow: no step lowers J".into() },
        };
        let decrease = p.samples.windows(2).map(|w| w[0].j - w[1].j).collect();
        debug_assert!(p.samples.iter().all(|s| s.masses.iter().all(|m| m.a.len() == n)));
        Ok(FlowOutcome { records, samples: p.samples, terminal, decrease, rejected: traj.rejected })
    }

    fn classify_sample(&self, st: &ReducedState, samples: &[FlowSample]) -> Option<Terminal> {
        if let Some(i) = st.outside_patch(self.k) {
            return Some(Terminal::RegionExit { mass: i, detail: format!("left the patch of record {}", st.records[i]) });
        }
        let floor = 1.0 / self.params.epsilon;
        if let Some(i) = st.config.masses.iter().position(|m| m.lambda < floor) {
            return Some(Terminal::RegionExit { mass: i, detail: format!("lambda fell below 1/epsilon = {floor}") });
        }
        let masses = &st.config.masses;
        for i in 0..masses.len() {
            for j in i + 1..masses.len() {
                let e = epsilon_ij(self.n(), &masses[i].a, masses[i].lambda, &masses[j].a, masses[j].lambda);
                if e >= self.params.epsilon {
                    return Some(Terminal::RegionExit { mass: i, detail: format!("interaction with mass {j} reached {e:.3}") });
                }
            }
        }
        let low = masses.iter().map(|m| m.lambda).fold(f64::INFINITY, f64::min);
        if low > self.params.lambda_max {
            let w = self.params.cauchy_window.min(samples.len());
            let tail = &samples[samples.len() - w..];
            let settled = w >= 2
                && st.records.iter().enumerate().all(|(i, &r)| {
                    let last = &tail[w - 1].masses[i].a;
                    let spread = tail
                        .iter()
                        .map(|s| s.masses[i].a.iter().zip(last).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
                        .fold(0.0, f64::max);
                    spread <= self.params.cauchy_radius * self.k.records[r].radius
                });
            if settled {
                return Some(Terminal::CriticalPointAtInfinity { limit: st.records.clone() });
            }
            if low > 100.0 * self.params.lambda_max {
                return Some(Terminal::BudgetExhausted { detail: "scales diverged while the centers kept moving".into() });
            }
            return None;
        }
        match self.field_unchecked(st) {
            Ok(t) if t.norm(&st.config) < self.params.grad_tol => Some(Terminal::InteriorStationary),
            _ => None,
        }
    }
}
