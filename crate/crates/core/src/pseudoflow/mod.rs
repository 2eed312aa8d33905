//! Pseudo-gradient fields near critical points at infinity, the flow they
//! generate, and numerical checks of the expansions behind them.

pub mod battery;
mod cutoff;
mod field;
mod flow;
mod moment;
mod verify;

pub use cutoff::{cutoffs, ramp, smoothstep, CutoffParams, CutoffValues};
pub use field::{differential_drift, FlowContext, PseudoflowParams, ReducedState, Tangent};
pub use flow::{FlowOutcome, FlowSample, Terminal};
pub use moment::{MomentCache, MomentKind};
pub use verify::{bubble_kernel_mass, log_log_slope, DecreaseCheck, ExpansionCheck, Verdict};
