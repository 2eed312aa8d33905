//! The domain Ω and its Navier Green's function.

mod collocation;
pub mod green;
mod model;

pub use collocation::{Collocation, NavierSolution};
pub use green::{ball_regular_part, ball_regular_part_grad, collocation_residual, green, regular_part, regular_part_grad, GreenEval};
pub use model::{Backend, DomainModel, DomainSpec, INTERIOR_MARGIN};
