//! The reduced functional on sums of projected bubbles and its
//! derivatives along the bubble parameters.
//!
//! With `u = Σ αᵢ Pδᵢ` and `S = Σ αᵢ δᵢ^p`,
//!
//! ```text
//! N = ∫ S u  (= ∫ (Δu)²),   D = ∫ K u^q,   J = N^{n/(n-4)} / D.
//! ```
//!
//! Everything is integrated in one sweep: one polar pass per mass,
//! centered at the mass and weighted by a partition of unity, so each
//! concentration is resolved by its own rule.

use serde::{Deserialize, Serialize};

use super::profile::{c_n, epsilon_ij, Bubble};
use super::projected::projection_constant;
use crate::domain::{ball_regular_part, ball_regular_part_grad, Backend, DomainModel, NavierSolution};
use crate::error::{Error, Result};
use crate::kmodel::KModel;
use crate::numerics::{integrate_polar_vec, PolarRule, QuadratureSpec, RadialRule, Scheme};

/// Partition weights are `exp(-|x-aᵢ|²/σ²)` with `σ² = d²/SHARPNESS`, `d`
/// the smallest distance between distinct centers; a mass then weighs
/// `e^{-SHARPNESS}` at its nearest neighbour. Switches happen across
/// hyperplanes, which the radial panels resolve exactly.
const PARTITION_SHARPNESS: f64 = 64.0;
/// Rounding allowance on `u`, relative to the largest peak.
const POSITIVITY_SLACK: f64 = 1e-6;
/// A pass moves its center onto the kink hyperplane `x_k = y_k` of K when
/// the mass is this close to it, in units of `1/λ`.
const KINK_SNAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Mass {
    pub alpha: f64,
    pub a: Vec<f64>,
    pub lambda: f64,
}

impl Mass {
    pub fn bubble(&self) -> Bubble {
        Bubble { a: self.a.clone(), lambda: self.lambda }
    }
}

/// A point `Σ αᵢ Pδ(aᵢ, λᵢ)` of the set of potential critical points at
/// infinity (the orthogonal part is taken to be zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Configuration {
    pub masses: Vec<Mass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionKind {
    /// `λᵢ ∂/∂λᵢ`.
    Dilation,
    /// `(1/λᵢ) ∂/∂(aᵢ)_k`.
    Translation(usize),
    /// `αᵢ ∂/∂αᵢ`.
    Weight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PairingDirection {
    pub mass: usize,
    pub kind: DirectionKind,
}

impl Configuration {
    pub fn single(alpha: f64, a: Vec<f64>, lambda: f64) -> Self {
        Self { masses: vec![Mass { alpha, a, lambda }] }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn validate(&self, domain: &DomainModel) -> Result<()> {
        if self.masses.is_empty() {
            return Err(Error::Config("configuration needs at least one mass".into()));
        }
        for (i, m) in self.masses.iter().enumerate() {
            if m.a.len() != domain.n() {
                return Err(Error::Config(format!("mass {i}: center must have {} entries", domain.n())));
            }
            if !(m.alpha > 0.0 && m.alpha.is_finite()) || !(m.lambda > 0.0 && m.lambda.is_finite()) {
                return Err(Error::Config(format!("mass {i}: alpha and lambda must be positive")));
            }
            domain.check_interior(&m.a)?;
        }
        Ok(())
    }

    /// Largest interaction `ε_ij` over pairs (0 for a single mass).
    pub fn max_epsilon(&self, n: usize) -> f64 {
        let mut e = 0.0f64;
        for (i, a) in self.masses.iter().enumerate() {
            for b in &self.masses[i + 1..] {
                e = e.max(epsilon_ij(n, &a.a, a.lambda, &b.a, b.lambda));
            }
        }
        e
    }

    /// Membership in `V(p, ε)`: pairwise interactions, concentration and
    /// comparable weights (`α_i/α_j ≤ 1 + ε` after normalization by `K`
    /// is left to the caller; here the raw ratio bound is `1/ε`).
    pub fn in_v(&self, domain: &DomainModel, eps: f64) -> bool {
        let n = domain.n();
        if self.validate(domain).is_err() || self.max_epsilon(n) >= eps {
            return false;
        }
        let concentrated = self.masses.iter().all(|m| domain.boundary_distance(&m.a).map_or(false, |d| m.lambda * d > 1.0 / eps));
        let amax = self.masses.iter().map(|m| m.alpha).fold(0.0, f64::max);
        let amin = self.masses.iter().map(|m| m.alpha).fold(f64::INFINITY, f64::min);
        concentrated && amax / amin < 1.0 / eps
    }

    /// Moves the parameter of `dir` by `t`: `λ ↦ λeᵗ`, `a_k ↦ a_k + t/λ`,
    /// `α ↦ αeᵗ`, so that `d/dt` is the corresponding direction.
    pub fn moved(&self, dir: PairingDirection, t: f64) -> Self {
        let mut c = self.clone();
        let m = &mut c.masses[dir.mass];
        match dir.kind {
            DirectionKind::Dilation => m.lambda *= t.exp(),
            DirectionKind::Translation(k) => m.a[k] += t / m.lambda,
            DirectionKind::Weight => m.alpha *= t.exp(),
        }
        c
    }

    pub fn scaled(&self, t: f64) -> Self {
        let mut c = self.clone();
        c.masses.iter_mut().for_each(|m| m.alpha *= t);
        c
    }
}

/// Value of the functional with its building blocks and the requested
/// pairings `⟨∂J(u), h⟩`, where `h` is the direction applied to `Pδᵢ`
/// (without the weight `αᵢ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Evaluation {
    pub j: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub pairings: Vec<f64>,
}

pub fn functional_j(domain: &DomainModel, k: &KModel, config: &Configuration, spec: &QuadratureSpec) -> Result<f64> {
    Ok(evaluate(domain, k, config, &[], spec)?.j)
}

pub fn gradient_pairing(
    domain: &DomainModel,
    k: &KModel,
    config: &Configuration,
    dir: PairingDirection,
    spec: &QuadratureSpec,
) -> Result<f64> {
    Ok(evaluate(domain, k, config, &[dir], spec)?.pairings[0])
}

/// Regular-part evaluator for one mass: `H(a, x)` and, when asked,
/// `∇_a H(a, x)`.
enum Regular<'a> {
    Ball { n: usize, a: Vec<f64> },
    Collocation { value: NavierSolution<'a>, grad: Vec<NavierSolution<'a>> },
}

impl<'a> Regular<'a> {
    fn new(domain: &'a DomainModel, a: &[f64], with_grad: bool) -> Result<Self> {
        let n = domain.n();
        match domain.backend() {
            Backend::UnitBall => Ok(Regular::Ball { n, a: a.to_vec() }),
            Backend::GenericCollocation => {
                // H(a, ·) is the Navier solution with the singular part's
                // boundary data; differentiating the data in `a` gives ∇_a H.
                let solver = domain.collocation()?;
                let nf = n as f64;
                let d2 = |b: &[f64]| b.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                let value = solver.solve(|b| d2(b).powf((4.0 - nf) / 2.0), |b| -2.0 * (nf - 4.0) * d2(b).powf((2.0 - nf) / 2.0));
                let grad = if with_grad {
                    (0..n)
                        .map(|k| {
                            solver.solve(
                                |b| (nf - 4.0) * d2(b).powf((2.0 - nf) / 2.0) * (b[k] - a[k]),
                                |b| -2.0 * (nf - 4.0) * (nf - 2.0) * d2(b).powf(-nf / 2.0) * (b[k] - a[k]),
                            )
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                Ok(Regular::Collocation { value, grad })
            }
        }
    }

    fn eval(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        match self {
            Regular::Ball { n, a } => match grad {
                None => ball_regular_part(*n, a, x),
                Some(g) => {
                    let (h, dh) = ball_regular_part_grad(*n, a, x);
                    g.copy_from_slice(&dh);
                    h
                }
            },
            Regular::Collocation { value, grad: gs } => {
                if let Some(g) = grad {
                    for (gk, s) in g.iter_mut().zip(gs) {
                        *gk = s.value(x);
                    }
                }
                value.value(x)
            }
        }
    }
}

/// Per-sample integrand: the two functional densities followed by two
/// densities per direction.
struct Integrand<'a> {
    n: usize,
    k: &'a KModel,
    config: &'a Configuration,
    dirs: &'a [PairingDirection],
    regular: Vec<Regular<'a>>,
    need_grad: Vec<bool>,
    /// `c` of the expansion.
    proj: f64,
    cn: f64,
    floor: f64,
    /// `1/σ²` of the partition.
    inv_sigma2: f64,
}

/// Kink `b_k χ |x_k - y_k|^β` of record `record` on `axis`.
#[derive(Clone, Copy, PartialEq)]
struct Kink {
    record: usize,
    axis: usize,
}

/// Which part of K a pass integrates.
#[derive(Clone, Copy)]
enum KPart<'a> {
    /// K minus the listed kinks.
    Smooth(&'a [Kink]),
    /// `b_k χ r^β` for a kink on a hyperplane through the center (the
    /// `|ω_k|^β` factor sits in the rule); only the denominator densities
    /// are filled.
    Kink(Kink),
}

impl Integrand<'_> {
    fn partition(&self, x: &[f64], pass: usize) -> f64 {
        if self.config.masses.len() == 1 {
            return 1.0;
        }
        let d2 = |m: &Mass| x.iter().zip(&m.a).map(|(x, a)| (x - a) * (x - a)).sum::<f64>();
        let own = d2(&self.config.masses[pass]);
        let total: f64 = self.config.masses.iter().map(|m| (-(d2(m) - own) * self.inv_sigma2).exp()).sum();
        1.0 / total
    }

    fn eval(&self, x: &[f64], pass: usize, part: KPart<'_>, radius: f64, out: &mut [f64]) -> Result<()> {
        let n = self.n;
        let nf = n as f64;
        let kexp = (nf - 4.0) / 2.0;
        let p = (nf + 4.0) / (nf - 4.0);
        let q = 2.0 * nf / (nf - 4.0);
        let pm = self.config.masses.len();
        let mut delta = vec![0.0; pm];
        let mut pdelta = vec![0.0; pm];
        let mut s = 0.0;
        let mut u = 0.0;
        let mut hs = vec![0.0; pm];
        let mut dh = vec![vec![0.0; n]; pm];
        let mut wis = vec![0.0; pm];
        for (i, m) in self.config.masses.iter().enumerate() {
            let r2: f64 = x.iter().zip(&m.a).map(|(x, a)| (x - a) * (x - a)).sum();
            let w = 1.0 + m.lambda * m.lambda * r2;
            let d = self.cn * (m.lambda / w).powf(kexp);
            let h = self.regular[i].eval(x, if self.need_grad[i] { Some(&mut dh[i]) } else { None });
            delta[i] = d;
            wis[i] = w;
            hs[i] = h;
            pdelta[i] = d - self.proj * m.lambda.powf(-kexp) * h;
            s += m.alpha * d.powf(p);
            u += m.alpha * pdelta[i];
        }
        if u < -self.floor {
            return Err(Error::Positivity(u));
        }
        let up = u.max(0.0);
        let weight = self.partition(x, pass);
        let kval = match part {
            KPart::Smooth(kinks) => {
                let mut v = self.k.value(x);
                for kink in kinks {
                    let rec = &self.k.records[kink.record];
                    let (chi, _) = rec.weight(x);
                    if chi > 0.0 {
                        v -= chi * rec.b[kink.axis] * (x[kink.axis] - rec.y[kink.axis]).abs().powf(rec.beta);
                    }
                }
                v
            }
            KPart::Kink(kink) => {
                let rec = &self.k.records[kink.record];
                rec.b[kink.axis] * rec.weight(x).0 * radius.powf(rec.beta)
            }
        };
        let kink_only = matches!(part, KPart::Kink(..));
        out[0] = if kink_only { 0.0 } else { weight * s * u };
        out[1] = weight * kval * up.powf(q);
        let kuq1 = weight * kval * up.powf(q - 1.0);
        for (slot, dir) in self.dirs.iter().enumerate() {
            let i = dir.mass;
            let m = &self.config.masses[i];
            let scale = self.proj * m.lambda.powf(-kexp);
            // Derivatives of δᵢ^p and of Pδᵢ.
            let (e_small, big_e) = match dir.kind {
                DirectionKind::Dilation => {
                    let dl = kexp * (2.0 - wis[i]) / wis[i];
                    (p * delta[i].powf(p) * dl, delta[i] * dl + kexp * scale * hs[i])
                }
                DirectionKind::Translation(k) => {
                    let dl = 2.0 * kexp * m.lambda * (x[k] - m.a[k]) / wis[i];
                    (p * delta[i].powf(p) * dl, delta[i] * dl - scale * dh[i][k] / m.lambda)
                }
                DirectionKind::Weight => (delta[i].powf(p), pdelta[i]),
            };
            out[2 + 2 * slot] = if kink_only { 0.0 } else { weight * (e_small * u + s * big_e) };
            out[3 + 2 * slot] = kuq1 * big_e;
        }
        Ok(())
    }
}

fn sphere_crossings(center: &[f64], dir: &[f64], y: &[f64], rho: f64, out: &mut Vec<f64>) {
    // |c + rω - y|² = ρ²
    let v: Vec<f64> = center.iter().zip(y).map(|(c, y)| c - y).collect();
    let b: f64 = v.iter().zip(dir).map(|(v, d)| v * d).sum();
    let c: f64 = v.iter().map(|v| v * v).sum::<f64>() - rho * rho;
    let disc = b * b - c;
    if disc > 0.0 {
        let s = disc.sqrt();
        out.extend([-b - s, -b + s].into_iter().filter(|r| *r > 0.0));
    }
}

/// Radii along the ray where the pass of center `own` hands over to the
/// center `other`, with edges a few transition widths on either side.
fn partition_switches(center: &[f64], dir: &[f64], own: &[f64], other: &[f64], inv_sigma2: f64, out: &mut Vec<f64>) {
    // ln(φ_own/φ_other) along the ray is (A + B r)/σ².
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..center.len() {
        let (uo, uj) = (center[i] - own[i], center[i] - other[i]);
        a += uj * uj - uo * uo;
        b += 2.0 * dir[i] * (other[i] - own[i]);
    }
    let slope = b * inv_sigma2;
    if slope.abs() < 1e-300 {
        return;
    }
    let r = -a / b;
    let width = 1.0 / slope.abs();
    out.extend([-24.0, -12.0, -6.0, -3.0, 0.0, 3.0, 6.0, 12.0, 24.0].iter().map(|m| r + m * width).filter(|r| *r > 0.0));
}

/// `J`, `N`, `D` and the pairings along `dirs`.
pub fn evaluate(
    domain: &DomainModel,
    k: &KModel,
    config: &Configuration,
    dirs: &[PairingDirection],
    spec: &QuadratureSpec,
) -> Result<Evaluation> {
    spec.validate()?;
    if spec.scheme != Scheme::RadialProduct {
        return Err(Error::Config("the functional needs the radial-product quadrature scheme".into()));
    }
    config.validate(domain)?;
    let n = domain.n();
    for d in dirs {
        if d.mass >= config.len() || matches!(d.kind, DirectionKind::Translation(k) if k >= n) {
            return Err(Error::Config(format!("direction {d:?} does not match the configuration")));
        }
    }
    for m in &config.masses {
        let dist = domain.boundary_distance(&m.a)?;
        if m.lambda * dist < 1.0 {
            return Err(Error::Accuracy(m.lambda * dist));
        }
    }
    let nf = n as f64;
    let kexp = (nf - 4.0) / 2.0;
    let cn = c_n::<f64>(n);
    let mut need_grad = vec![false; config.len()];
    for d in dirs {
        if matches!(d.kind, DirectionKind::Translation(_)) {
            need_grad[d.mass] = true;
        }
    }
    let regular = config
        .masses
        .iter()
        .zip(&need_grad)
        .map(|(m, g)| Regular::new(domain, &m.a, *g))
        .collect::<Result<Vec<_>>>()?;
    // The expansion misses the boundary condition by about
    // `c_n λ^{-(n-4)/2} (λd)^{-2} d^{4-n}`; values of `u` within that band
    // (plus rounding) count as zero.
    let mut floor = 0.0;
    let mut peak = 0.0f64;
    for m in &config.masses {
        let d = domain.boundary_distance(&m.a)?;
        floor += 2.0 * m.alpha * cn * m.lambda.powf(-kexp) * (m.lambda * d).powi(-2) * d.powf(4.0 - nf);
        peak = peak.max(m.alpha * cn * m.lambda.powf(kexp));
    }
    // Partition width from the closest pair of distinct centers.
    let mut dmin = f64::INFINITY;
    for (i, a) in config.masses.iter().enumerate() {
        for b in &config.masses[i + 1..] {
            let d2: f64 = a.a.iter().zip(&b.a).map(|(x, y)| (x - y) * (x - y)).sum();
            if d2 > 0.0 {
                dmin = dmin.min(d2.sqrt());
            }
        }
    }
    let inv_sigma2 = if dmin.is_finite() { PARTITION_SHARPNESS / (dmin * dmin) } else { 0.0 };
    let integrand = Integrand {
        n,
        k,
        config,
        dirs,
        regular,
        need_grad,
        proj: projection_constant(domain),
        cn,
        floor: floor + POSITIVITY_SLACK * peak,
        inv_sigma2,
    };
    let width = 2 + 2 * dirs.len();
    let mut acc = vec![0.0; width];
    let order = spec.angular_order();
    let smooth_rule = PolarRule::cached(n, order, None);
    for (pass, m) in config.masses.iter().enumerate() {
        // Move the center onto nearby kink hyperplanes of K, one record per
        // axis (the closest).
        let mut center = m.a.clone();
        let mut snapped: Vec<Kink> = Vec::new();
        for axis in 0..n {
            let best = k
                .records
                .iter()
                .enumerate()
                .map(|(r, rec)| (r, (rec.y[axis] - m.a[axis]).abs()))
                .filter(|(_, d)| d * m.lambda < KINK_SNAP)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((record, _)) = best {
                center[axis] = k.records[record].y[axis];
                snapped.push(Kink { record, axis });
            }
        }
        // Masses sharing this center contribute their own scales.
        let scale = config
            .masses
            .iter()
            .filter(|o| o.a.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt() * m.lambda <= 1.0)
            .map(|o| o.lambda)
            .fold(m.lambda, f64::max);
        let breaks = |dir: &[f64]| {
            let mut out = Vec::new();
            for (j, other) in config.masses.iter().enumerate() {
                if j != pass && inv_sigma2 > 0.0 {
                    partition_switches(&center, dir, &m.a, &other.a, inv_sigma2, &mut out);
                }
            }
            for (ri, rec) in k.records.iter().enumerate() {
                sphere_crossings(&center, dir, &rec.y, rec.radius, &mut out);
                sphere_crossings(&center, dir, &rec.y, 0.5 * rec.radius, &mut out);
                for axis in 0..n {
                    if dir[axis] == 0.0 || snapped.contains(&Kink { record: ri, axis }) {
                        continue;
                    }
                    let r = (rec.y[axis] - center[axis]) / dir[axis];
                    if r > 0.0 {
                        let d2: f64 = center.iter().zip(dir).zip(&rec.y).map(|((c, d), y)| (c + r * d - y).powi(2)).sum();
                        if d2 < rec.radius * rec.radius {
                            out.push(r);
                        }
                    }
                }
            }
            out
        };
        let radial = RadialRule::new(scale, spec.radial_order());
        integrate_polar_vec(
            &mut |x: &[f64], out: &mut [f64]| integrand.eval(x, pass, KPart::Smooth(&snapped), 0.0, out),
            width,
            domain,
            &center,
            &smooth_rule,
            radial,
            &breaks,
            &mut acc,
        )?;
        for &kink in &snapped {
            let rule = PolarRule::cached(n, order, Some((kink.axis, k.records[kink.record].beta)));
            integrate_polar_vec(
                &mut |x: &[f64], out: &mut [f64]| {
                    let radius = x.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt();
                    integrand.eval(x, pass, KPart::Kink(kink), radius, out)
                },
                width,
                domain,
                &center,
                &rule,
                radial,
                &breaks,
                &mut acc,
            )?;
        }
    }
    let (num, den) = (acc[0], acc[1]);
    if !(num > 0.0) || !(den > 0.0) {
        return Err(Error::Positivity(den.min(num)));
    }
    let e = nf / (nf - 4.0);
    let q = 2.0 * nf / (nf - 4.0);
    let j = num.powf(e) / den;
    let pairings = dirs
        .iter()
        .enumerate()
        .map(|(slot, d)| {
            let alpha = config.masses[d.mass].alpha;
            // d/dt J along the parameter, divided by α to pair with ∂Pδ.
            let dn = alpha * acc[2 + 2 * slot];
            let dd = q * alpha * acc[3 + 2 * slot];
            j * (e * dn / num - dd / den) / alpha
        })
        .collect();
    Ok(Evaluation { j, numerator: num, denominator: den, pairings })
}
