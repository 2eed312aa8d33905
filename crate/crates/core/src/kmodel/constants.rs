//! Universal constants of the expansions, as radial integrals over ℝⁿ.
//!
//! `|z₁|^β`-moments factor into the angular moment
//! `A_β = ∫_{S^{n-1}} |θ₁|^β = 2π^{(n-1)/2} Γ((β+1)/2) / Γ((n+β)/2)` times a
//! radial integral.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::bubble::c_n;
use crate::error::{Error, Result};
use crate::numerics::{integrate_interval, integrate_radial, sphere_area, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct UniversalConstants {
    pub n: usize,
    pub beta: f64,
    /// `∫ |x₁|^{n-4} (1+|x|²)^{-n}`, used by the classification and the matrix.
    pub c1_thm: Estimate,
    /// `∫ (1+|x|²)^{-(n+4)/2}`.
    pub c2_thm: Estimate,
    /// `∫ |z₁|^β (|z|²-1) (1+|z|²)^{-(n+1)}`, used by the dilation expansion.
    pub c1_prop: Estimate,
    /// `∫ (|z|²-1) (1+|z|²)^{-n}`.
    pub c2_prop: Estimate,
    /// `(n-2) c_n^{2n/(n-4)} ∫ |z|² (1+|z|²)^{-(n+1)}`.
    pub c3: Estimate,
}

/// `∫_{S^{n-1}} |θ₁|^β` in closed form.
pub fn angular_moment(n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    2.0 * (0.5 * (nf - 1.0) * std::f64::consts::PI.ln() + ln_gamma((beta + 1.0) / 2.0) - ln_gamma((nf + beta) / 2.0)).exp()
}

/// The same moment through the one-dimensional reduction
/// `ω_{n-2} ∫_{-1}^{1} |t|^β (1-t²)^{(n-3)/2} dt`, by adaptive quadrature.
pub fn angular_moment_by_quadrature(n: usize, beta: f64, rel_tol: f64) -> Result<f64> {
    let a = (n as f64 - 3.0) / 2.0;
    // t = sin θ on [0, π/2] removes the endpoint singularity of (1-t²)^a.
    let half = integrate_interval(
        |th: f64| th.sin().powf(beta) * th.cos().powf(2.0 * a + 1.0),
        0.0,
        std::f64::consts::FRAC_PI_2,
        rel_tol,
        0.0,
        8,
    )?;
    Ok(2.0 * sphere_area::<f64>(n - 1) * half)
}

/// `∫_{ℝⁿ} (1+|z|²)^{-n}`, the mass of `δ^{2n/(n-4)}` up to `c_n^{2n/(n-4)}`.
pub fn bubble_mass(n: usize, spec: &QuadratureSpec) -> Result<f64> {
    integrate_radial(|r: f64| (1.0 + r * r).powi(-(n as i32)), n, spec)
}

fn estimate<F: Fn(&QuadratureSpec) -> Result<f64>>(f: F, spec: &QuadratureSpec) -> Result<Estimate> {
    let coarse = f(spec)?;
    let fine = f(&spec.clone().with_tol(spec.target_rel_tol / 2.0))?;
    Ok(Estimate { value: fine, error: 2.0 * (fine - coarse).abs() + spec.target_rel_tol * fine.abs() })
}

pub fn universal_constants(n: usize, beta: f64, spec: &QuadratureSpec) -> Result<UniversalConstants> {
    if n < 5 {
        return Err(Error::Config(format!("dimension must be at least 5, got {n}")));
    }
    if !(beta > 0.0) {
        return Err(Error::Config("beta must be positive".into()));
    }
    let nf = n as f64;
    if beta >= nf {
        return Err(Error::DivergentIntegral(format!("|z1|^beta moment diverges for beta = {beta} >= n = {n}")));
    }
    let area = sphere_area::<f64>(n);
    let ni = n as i32;
    let c1_thm = estimate(
        |s| Ok(angular_moment(n, nf - 4.0) / area * integrate_radial(|r: f64| r.powf(nf - 4.0) * (1.0 + r * r).powi(-ni), n, s)?),
        spec,
    )?;
    let c2_thm = estimate(|s| integrate_radial(|r: f64| (1.0 + r * r).powf(-(nf + 4.0) / 2.0), n, s), spec)?;
    let c1_prop = estimate(
        |s| {
            Ok(angular_moment(n, beta) / area
                * integrate_radial(|r: f64| r.powf(beta) * (r * r - 1.0) * (1.0 + r * r).powi(-ni - 1), n, s)?)
        },
        spec,
    )?;
    let c2_prop = estimate(|s| integrate_radial(|r: f64| (r * r - 1.0) * (1.0 + r * r).powi(-ni), n, s), spec)?;
    let q = c_n::<f64>(n).powf(2.0 * nf / (nf - 4.0));
    let c3 = estimate(|s| Ok((nf - 2.0) * q * integrate_radial(|r: f64| r * r * (1.0 + r * r).powi(-ni - 1), n, s)?), spec)?;
    Ok(UniversalConstants { n, beta, c1_thm, c2_thm, c1_prop, c2_prop, c3 })
}
