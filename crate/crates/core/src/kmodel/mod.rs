//! β-flat functions K, their critical points, and the constants that enter
//! the expansions.

mod classify;
pub mod constants;
mod model;

pub use classify::{classify, ClassificationReport, PointClass, RecordClassification};
pub use constants::{angular_moment, bubble_mass, universal_constants, Estimate, UniversalConstants};
pub use model::{check_condition_a, k_eval, k_grad, verify_flatness, ConditionA, CriticalPointRecord, FlatnessReport, KModel};
