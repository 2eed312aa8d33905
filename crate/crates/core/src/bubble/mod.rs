//! Bubbles, their projections, and the reduced functional.

mod functional;
mod profile;
mod projected;

pub use functional::*;
pub use profile::{
    bubble_laplacian, bubble_value, c_n, dilation_log_derivative, epsilon_ij, power_p, power_q, translation_log_derivative,
    Bubble,
};
pub use projected::{projected_bubble, projection_constant, ProjectionBackend};
