use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::collocation::Collocation;
use crate::error::{Error, Result};
use crate::numerics::Region;

/// Minimum distance to the boundary for points handed to the Green's
/// function.
pub const INTERIOR_MARGIN: f64 = 1e-6;

/// Domain description as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    UnitBall {
        n: usize,
    },
    #[serde(rename_all = "kebab-case")]
    GenericCollocation {
        n: usize,
        #[serde(default)]
        center: Option<Vec<f64>>,
        semi_axes: Vec<f64>,
        euler_characteristic: i64,
        #[serde(default)]
        sources: Option<usize>,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    UnitBall,
    GenericCollocation,
}

/// Ω with its Green's function backend. Only axis-aligned ellipsoids are
/// representable; the unit ball is the special case with unit semi-axes.
#[derive(Debug)]
pub struct DomainModel {
    n: usize,
    backend: Backend,
    center: Vec<f64>,
    semi_axes: Vec<f64>,
    euler: i64,
    sources: usize,
    seed: u64,
    solver: OnceLock<std::result::Result<Collocation, Error>>,
    projection: OnceLock<f64>,
}

impl Clone for DomainModel {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            backend: self.backend,
            center: self.center.clone(),
            semi_axes: self.semi_axes.clone(),
            euler: self.euler,
            sources: self.sources,
            seed: self.seed,
            solver: OnceLock::new(),
            projection: OnceLock::new(),
        }
    }
}

impl DomainModel {
    pub fn unit_ball(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            backend: Backend::UnitBall,
            center: vec![0.0; n],
            semi_axes: vec![1.0; n],
            euler: 1,
            sources: DEFAULT_SOURCES,
            seed: 0,
            solver: OnceLock::new(),
            projection: OnceLock::new(),
        })
    }

    /// Ellipsoid with a collocation Green's function. `sources` is the
    /// number of exterior source points.
    pub fn ellipsoid(
        n: usize,
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        euler: i64,
        sources: usize,
        seed: u64,
    ) -> Result<Self> {
        check_dim(n)?;
        if center.len() != n || semi_axes.len() != n {
            return Err(Error::Config(format!("center and semi-axes must have {n} entries")));
        }
        if semi_axes.iter().any(|s| !(*s > 0.0)) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("semi-axes must be positive and the center finite".into()));
        }
        if sources < 2 * n {
            return Err(Error::Config(format!("need at least {} collocation sources", 2 * n)));
        }
        Ok(Self {
            n,
            backend: Backend::GenericCollocation,
            center,
            semi_axes,
            euler,
            sources,
            seed,
            solver: OnceLock::new(),
            projection: OnceLock::new(),
        })
    }

    pub fn from_spec(spec: &DomainSpec) -> Result<Self> {
        match spec {
            DomainSpec::UnitBall { n } => Self::unit_ball(*n),
            DomainSpec::GenericCollocation { n, center, semi_axes, euler_characteristic, sources, seed } => Self::ellipsoid(
                *n,
                center.clone().unwrap_or_else(|| vec![0.0; *n]),
                semi_axes.clone(),
                *euler_characteristic,
                sources.unwrap_or(DEFAULT_SOURCES),
                *seed,
            ),
        }
    }

    pub fn spec(&self) -> DomainSpec {
        match self.backend {
            Backend::UnitBall => DomainSpec::UnitBall { n: self.n },
            Backend::GenericCollocation => DomainSpec::GenericCollocation {
                n: self.n,
                center: Some(self.center.clone()),
                semi_axes: self.semi_axes.clone(),
                euler_characteristic: self.euler,
                sources: Some(self.sources),
                seed: self.seed,
            },
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.euler
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub(crate) fn source_count(&self) -> usize {
        self.sources
    }

    pub(crate) fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn projection_cell(&self) -> &OnceLock<f64> {
        &self.projection
    }

    /// The collocation solver, built on first use. Available on every
    /// backend so the ball can be cross-checked against it.
    pub fn collocation(&self) -> Result<&Collocation> {
        self.solver.get_or_init(|| Collocation::build(self)).as_ref().map_err(Clone::clone)
    }

    /// Level function `Σ ((x-c)_i / s_i)²`, below one inside.
    fn level(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.center).zip(&self.semi_axes).map(|((x, c), s)| ((x - c) / s).powi(2)).sum()
    }

    pub fn check_interior(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        if !self.contains(x) || self.distance_unchecked(x) < INTERIOR_MARGIN {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    /// d(a, ∂Ω).
    pub fn boundary_distance(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.n || !self.contains(a) {
            return Err(Error::OutsideDomain(a.to_vec()));
        }
        Ok(self.distance_unchecked(a))
    }

    fn distance_unchecked(&self, a: &[f64]) -> f64 {
        if self.backend == Backend::UnitBall {
            return 1.0 - a.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        // Nearest boundary point x_i = c_i + s_i² p_i / (s_i² + t) with p = a - c;
        // the multiplier t ∈ (-min s², 0] solves Σ (s_i p_i / (s_i² + t))² = 1.
        let p: Vec<f64> = a.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let smin2 = self.semi_axes.iter().fold(f64::INFINITY, |m, s| m.min(s * s));
        let g = |t: f64| -> f64 {
            p.iter().zip(&self.semi_axes).map(|(p, s)| (s * p / (s * s + t)).powi(2)).sum::<f64>() - 1.0
        };
        let (mut lo, mut hi) = (-smin2, 0.0);
        if g(hi) >= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        p.iter()
            .zip(&self.semi_axes)
            .map(|(p, s)| {
                let x = s * s * p / (s * s + t);
                (x - p).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Seeded points of ∂Ω with outward unit normals.
    pub fn boundary_samples(&self, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut u: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                u.iter_mut().for_each(|v| *v /= norm);
                self.boundary_point(&u)
            })
            .collect()
    }

    /// Boundary points from a Halton sequence pushed through the normal
    /// quantile, starting at index `start`. Far more even than
    /// [`Self::boundary_samples`], which matters for collocation.
    pub fn boundary_quasi(&self, count: usize, start: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        (start..start + count)
            .map(|i| {
                let mut u: Vec<f64> =
                    PRIMES.iter().cycle().take(self.n).map(|&p| normal.inverse_cdf(radical_inverse(i as u64 + 1, p))).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                u.iter_mut().for_each(|v| *v /= norm);
                self.boundary_point(&u)
            })
            .collect()
    }

    /// Boundary point `c + s∘u` for a unit vector `u`, with its outward normal.
    pub fn boundary_point(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = (0..self.n).map(|i| self.center[i] + self.semi_axes[i] * u[i]).collect();
        let mut nu: Vec<f64> = (0..self.n).map(|i| u[i] / self.semi_axes[i]).collect();
        let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
        nu.iter_mut().for_each(|v| *v /= norm);
        (x, nu)
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / base as f64);
    while i > 0 {
        inv += (i % base) as f64 * f;
        i /= base;
        f /= base as f64;
    }
    inv
}

pub(crate) const DEFAULT_SOURCES: usize = 600;

fn check_dim(n: usize) -> Result<()> {
    if n < 5 {
        return Err(Error::Config(format!("dimension must be at least 5, got {n}")));
    }
    Ok(())
}

impl Region for DomainModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.level(x) < 1.0
    }

    fn ray_exit(&self, o: &[f64], d: &[f64]) -> f64 {
        // Σ ((o-c)_i + t d_i)² / s_i² = 1, positive root.
        let (mut a, mut b, mut c) = (0.0, 0.0, -1.0);
        for i in 0..self.n {
            let s2 = self.semi_axes[i] * self.semi_axes[i];
            let p = o[i] - self.center[i];
            a += d[i] * d[i] / s2;
            b += 2.0 * p * d[i] / s2;
            c += p * p / s2;
        }
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        // Stable form of (-b + disc) / 2a.
        if b >= 0.0 {
            -2.0 * c / (b + disc)
        } else {
            (-b + disc) / (2.0 * a)
        }
    }

    fn bounding_ball(&self) -> (Vec<f64>, f64) {
        (self.center.clone(), self.semi_axes.iter().fold(0.0f64, |m, s| m.max(*s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_distance_is_exact() {
        let d = DomainModel::unit_ball(5).unwrap();
        assert_eq!(d.boundary_distance(&[0.0; 5]).unwrap(), 1.0);
        assert_eq!(d.boundary_distance(&[0.75, 0.0, 0.0, 0.0, 0.0]).unwrap(), 0.25);
        assert!(matches!(d.boundary_distance(&[1.5, 0.0, 0.0, 0.0, 0.0]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn ball_samples_lie_on_the_sphere() {
        let d = DomainModel::unit_ball(6).unwrap();
        for (x, nu) in d.boundary_samples(200, 3) {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() <= 1e-12);
            assert!(x.iter().zip(&nu).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn ellipsoid_distance_matches_dense_sampling() {
        let d = DomainModel::ellipsoid(5, vec![0.1, 0.0, 0.0, 0.0, 0.0], vec![1.0, 0.8, 1.2, 1.0, 0.9], 1, 20, 0)
            .unwrap();
        let a = [0.3, 0.2, -0.1, 0.0, 0.1];
        let exact = d.boundary_distance(&a).unwrap();
        let sampled = d
            .boundary_samples(200_000, 9)
            .into_iter()
            .map(|(x, _)| x.iter().zip(&a).map(|(x, a)| (x - a).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(exact <= sampled + 1e-12);
        assert!(sampled - exact < 0.03, "{exact} vs {sampled}");
    }

    #[test]
    fn ray_exit_lands_on_boundary() {
        let d = DomainModel::ellipsoid(5, vec![0.0; 5], vec![1.0, 2.0, 1.0, 0.5, 1.0], 1, 20, 0).unwrap();
        let o = [0.1, -0.3, 0.2, 0.1, 0.0];
        let dir = [0.6, 0.0, -0.8, 0.0, 0.0];
        let t = d.ray_exit(&o, &dir);
        let x: Vec<f64> = o.iter().zip(&dir).map(|(o, d)| o + t * d).collect();
        assert!((d.level(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let json = r#"{"backend":"generic-collocation","n":5,"semi-axes":[1,1,1,1,1],"euler-characteristic":1}"#;
        let spec: DomainSpec = serde_json::from_str(json).unwrap();
        let d = DomainModel::from_spec(&spec).unwrap();
        assert_eq!(d.backend(), Backend::GenericCollocation);
        let bad = r#"{"backend":"unit-ball","n":5,"radius":2}"#;
        assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
        assert!(DomainModel::unit_ball(4).is_err());
    }
}
