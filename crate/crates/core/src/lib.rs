pub mod bubble;
pub mod cli;
pub mod domain;
pub mod error;
pub mod infinity;
pub mod kmodel;
pub mod numerics;
pub mod pseudoflow;

pub use error::{Error, Result};
pub use numerics::Real;

pub type SymMatrixF32 = numerics::SymMatrix<f32>;
pub type SymMatrixF64 = numerics::SymMatrix<f64>;
pub type OdeControlF32 = numerics::OdeControl<f32>;
pub type OdeControlF64 = numerics::OdeControl<f64>;
pub type TrajectoryF32 = numerics::Trajectory<f32>;
pub type TrajectoryF64 = numerics::Trajectory<f64>;
pub type CutoffParamsF32 = pseudoflow::CutoffParams<f32>;
pub type CutoffParamsF64 = pseudoflow::CutoffParams<f64>;
pub type CutoffValuesF32 = pseudoflow::CutoffValues<f32>;
pub type CutoffValuesF64 = pseudoflow::CutoffValues<f64>;
