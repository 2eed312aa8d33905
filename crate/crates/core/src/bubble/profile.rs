//! The standard bubble `δ_{a,λ}(x) = c_n (λ / (1 + λ²|x-a|²))^{(n-4)/2}`,
//! which solves `Δ²δ = δ^{(n+4)/(n-4)}` on ℝⁿ.

use serde::{Deserialize, Serialize};

use crate::numerics::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bubble {
    pub a: Vec<f64>,
    pub lambda: f64,
}

/// `[(n-4)(n-2)n(n+2)]^{(n-4)/8}`.
pub fn c_n<T: Real>(n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let four = T::lit(4.0);
    let two = T::lit(2.0);
    ((nf - four) * (nf - two) * nf * (nf + two)).powf((nf - four) / T::lit(8.0))
}

/// Critical exponent `(n+4)/(n-4)`.
pub fn power_p<T: Real>(n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    (nf + T::lit(4.0)) / (nf - T::lit(4.0))
}

/// Sobolev exponent `2n/(n-4)`.
pub fn power_q<T: Real>(n: usize) -> T {
    let nf = T::from_usize_lossy(n);
    T::lit(2.0) * nf / (nf - T::lit(4.0))
}

fn dist2<T: Real>(x: &[T], a: &[T]) -> T {
    x.iter().zip(a).fold(T::zero(), |s, (x, a)| s + (*x - *a) * (*x - *a))
}

pub fn bubble_value<T: Real>(n: usize, a: &[T], lambda: T, x: &[T]) -> T {
    let k = (T::from_usize_lossy(n) - T::lit(4.0)) / T::lit(2.0);
    c_n::<T>(n) * (lambda / (T::one() + lambda * lambda * dist2(x, a))).powf(k)
}

/// `Δδ = -(n-4) c_n λ^{k+2} w^{-k-2} (2w + n - 2)` with `w = 1 + λ²|x-a|²`, `k = (n-4)/2`.
pub fn bubble_laplacian<T: Real>(n: usize, a: &[T], lambda: T, x: &[T]) -> T {
    let nf = T::from_usize_lossy(n);
    let k = (nf - T::lit(4.0)) / T::lit(2.0);
    let w = T::one() + lambda * lambda * dist2(x, a);
    -(nf - T::lit(4.0)) * c_n::<T>(n) * lambda.powf(k + T::lit(2.0)) * w.powf(-k - T::lit(2.0)) * (T::lit(2.0) * w + nf - T::lit(2.0))
}

/// `λ ∂_λ ln δ = k (1 - λ²r²) / (1 + λ²r²)`.
pub fn dilation_log_derivative<T: Real>(n: usize, a: &[T], lambda: T, x: &[T]) -> T {
    let k = (T::from_usize_lossy(n) - T::lit(4.0)) / T::lit(2.0);
    let l2r2 = lambda * lambda * dist2(x, a);
    k * (T::one() - l2r2) / (T::one() + l2r2)
}

/// `λ⁻¹ ∂_{a_axis} ln δ = 2kλ (x-a)_axis / (1 + λ²r²)`.
pub fn translation_log_derivative<T: Real>(n: usize, a: &[T], lambda: T, x: &[T], axis: usize) -> T {
    let k = (T::from_usize_lossy(n) - T::lit(4.0)) / T::lit(2.0);
    T::lit(2.0) * k * lambda * (x[axis] - a[axis]) / (T::one() + lambda * lambda * dist2(x, a))
}

/// `(λ_i/λ_j + λ_j/λ_i + λ_iλ_j|a_i-a_j|²)^{-(n-4)/2}`.
pub fn epsilon_ij<T: Real>(n: usize, a_i: &[T], lambda_i: T, a_j: &[T], lambda_j: T) -> T {
    let k = (T::from_usize_lossy(n) - T::lit(4.0)) / T::lit(2.0);
    (lambda_i / lambda_j + lambda_j / lambda_i + lambda_i * lambda_j * dist2(a_i, a_j)).powf(-k)
}
