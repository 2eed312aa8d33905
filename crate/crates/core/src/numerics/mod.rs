//! Deterministic numerical kernels shared by the rest of the crate.

pub mod ball;
pub mod eigen;
pub mod fd;
pub mod ode;
pub mod quadrature;
mod scalar;

pub use ball::{integrate_ball, integrate_polar, integrate_polar_vec, PolarRule, RadialRule, Region};
pub use eigen::{min_eigenvalue_sym, symmetric_eigenvalues, SymMatrix};
pub use fd::directional_fd;
pub use ode::{ode_integrate, ode_integrate_guarded, OdeControl, StopReason, Trajectory};
pub use quadrature::{
    gauss_legendre, integrate_half_line, integrate_interval, integrate_radial, sphere_area, QuadratureSpec, Scheme,
};
pub use scalar::Real;
