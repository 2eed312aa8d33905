//! Meshless Navier solver: fundamental solutions of Δ² placed outside Ω.
//!
//! With sources `z_j` the basis is `φ_j = |x-z_j|^{4-n}` and
//! `ψ_j = |x-z_j|^{2-n}`; since `Δφ_j = -2(n-4) ψ_j` and `Δψ_j = 0`, the two
//! boundary conditions decouple into two least-squares problems that share
//! the matrix `ψ_j(y_b)`, which is pseudo-inverted once per domain.

use nalgebra::DMatrix;

use super::model::DomainModel;
use crate::error::{Error, Result};

/// Sources sit on the boundary scaled by this factor about the center.
const SOURCE_SCALE: f64 = 4.0;
/// Boundary samples per source.
const OVERSAMPLING: usize = 3;

#[derive(Debug, Clone)]
pub struct Collocation {
    n: usize,
    sources: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
    /// `φ_j(y_b)`, boundary × sources.
    phi_b: DMatrix<f64>,
    /// Pseudo-inverse of `ψ_j(y_b)`, sources × boundary.
    pinv: DMatrix<f64>,
}

/// Coefficients of a collocation solution.
#[derive(Debug, Clone)]
pub struct NavierSolution<'a> {
    basis: &'a Collocation,
    c: Vec<f64>,
    d: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Collocation {
    pub(crate) fn build(domain: &DomainModel) -> Result<Self> {
        let n = domain.n();
        let j = domain.source_count();
        let b = OVERSAMPLING * j;
        let sources: Vec<Vec<f64>> = domain
            .boundary_quasi(j, 1)
            .into_iter()
            .map(|(x, _)| x.iter().zip(domain.center()).map(|(x, c)| c + SOURCE_SCALE * (x - c)).collect())
            .collect();
        let boundary: Vec<Vec<f64>> = domain.boundary_quasi(b, 1 + j).into_iter().map(|(x, _)| x).collect();
        let (e4, e2) = ((4.0 - n as f64) / 2.0, (2.0 - n as f64) / 2.0);
        let mut psi = DMatrix::<f64>::zeros(b, j);
        let mut phi_b = DMatrix::<f64>::zeros(b, j);
        for (r, y) in boundary.iter().enumerate() {
            for (c, z) in sources.iter().enumerate() {
                let d2 = dist2(y, z);
                psi[(r, c)] = d2.powf(e2);
                phi_b[(r, c)] = d2.powf(e4);
            }
        }
        let svd = psi.svd(true, true);
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(1e-15 * smax)
            .map_err(|e| Error::Backend(format!("collocation pseudo-inverse failed: {e}")))?;
        if pinv.iter().any(|v| !v.is_finite()) {
            return Err(Error::Backend("collocation pseudo-inverse is not finite".into()));
        }
        Ok(Self { n, sources, boundary, phi_b, pinv })
    }

    pub fn boundary_points(&self) -> &[Vec<f64>] {
        &self.boundary
    }

    /// Biharmonic `u` with `u = g(y)` and `Δu = lap_g(y)` on the boundary.
    pub fn solve<G, L>(&self, g: G, lap_g: L) -> NavierSolution<'_>
    where
        G: Fn(&[f64]) -> f64,
        L: Fn(&[f64]) -> f64,
    {
        let k = -2.0 * (self.n as f64 - 4.0);
        let rhs2 = nalgebra::DVector::from_iterator(self.boundary.len(), self.boundary.iter().map(|y| lap_g(y) / k));
        let c = &self.pinv * rhs2;
        let phi_c = &self.phi_b * &c;
        let rhs1 = nalgebra::DVector::from_iterator(self.boundary.len(), self.boundary.iter().enumerate().map(|(i, y)| g(y) - phi_c[i]));
        let d = &self.pinv * rhs1;
        NavierSolution { basis: self, c: c.iter().copied().collect(), d: d.iter().copied().collect() }
    }
}

impl NavierSolution<'_> {
    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.basis.n as f64;
        let (e4, e2) = ((4.0 - n) / 2.0, (2.0 - n) / 2.0);
        self.basis
            .sources
            .iter()
            .enumerate()
            .map(|(j, z)| {
                let d2 = dist2(x, z);
                self.c[j] * d2.powf(e4) + self.d[j] * d2.powf(e2)
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = self.basis.n as f64;
        let mut g = vec![0.0; x.len()];
        for (j, z) in self.basis.sources.iter().enumerate() {
            let d2 = dist2(x, z);
            // ∇|v|^k = k |v|^{k-2} v
            let s = self.c[j] * (4.0 - n) * d2.powf((2.0 - n) / 2.0) + self.d[j] * (2.0 - n) * d2.powf(-n / 2.0);
            for i in 0..x.len() {
                g[i] += s * (x[i] - z[i]);
            }
        }
        g
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let n = self.basis.n as f64;
        let k = -2.0 * (n - 4.0);
        self.basis.sources.iter().enumerate().map(|(j, z)| k * self.c[j] * dist2(x, z).powf((2.0 - n) / 2.0)).sum()
    }
}
