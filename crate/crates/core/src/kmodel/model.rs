use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::error::{Error, Result};

/// One critical point of K together with its flat normal form
/// `K(x) = K(y) + Σ b_k |(x-y)_k|^β` on the half-patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CriticalPointRecord {
    pub y: Vec<f64>,
    pub beta: f64,
    pub b: Vec<f64>,
    /// Patch radius ρ; the normal form is exact on `|x-y| ≤ ρ/2`.
    pub radius: f64,
    /// K(y).
    pub value: f64,
}

/// β-flat K: a smooth background `K₀ + t·x + (κ/2)|x|²` with the normal
/// forms glued in by a quintic partition of unity on `ρ/2 ≤ |x-y| ≤ ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct KModel {
    pub background: f64,
    #[serde(default)]
    pub tilt: Vec<f64>,
    /// Radial curvature κ of the background.
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub records: Vec<CriticalPointRecord>,
}

/// `1` on `[0, 1/2]`, `0` on `[1, ∞)`, quintic smoothstep between; argument is `|x-y|/ρ`.
pub(crate) fn patch_weight(t: f64) -> (f64, f64) {
    if t <= 0.5 {
        (1.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0)
    } else {
        let s = 2.0 * t - 1.0;
        let v = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
        let dv = 30.0 * s * s * (1.0 - s) * (1.0 - s) * 2.0;
        (1.0 - v, -dv)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl CriticalPointRecord {
    pub fn normal_form(&self, x: &[f64]) -> f64 {
        self.value + self.kink(x)
    }

    /// `Σ b_k |(x-y)_k|^β`.
    pub fn kink(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.y).zip(&self.b).map(|((x, y), b)| b * (x - y).abs().powf(self.beta)).sum()
    }

    fn normal_form_grad(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.y)
            .zip(&self.b)
            .map(|((x, y), b)| {
                let d = x - y;
                b * self.beta * d.abs().powf(self.beta - 1.0) * d.signum()
            })
            .collect()
    }

    /// Partition weight χ_y(x) and its gradient.
    pub fn weight(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let d: Vec<f64> = x.iter().zip(&self.y).map(|(x, y)| x - y).collect();
        let r = norm(&d);
        let (w, dw) = patch_weight(r / self.radius);
        let grad = if dw == 0.0 { vec![0.0; d.len()] } else { d.iter().map(|v| dw * v / (r * self.radius)).collect() };
        (w, grad)
    }

    pub fn sum_b(&self) -> f64 {
        self.b.iter().sum()
    }

    /// Number of negative coefficients.
    pub fn tilde_i(&self) -> usize {
        self.b.iter().filter(|b| **b < 0.0).count()
    }
}

impl KModel {
    pub fn constant(value: f64) -> Self {
        Self { background: value, tilt: Vec::new(), curvature: 0.0, records: Vec::new() }
    }

    pub fn validate(&self, domain: &DomainModel) -> Result<()> {
        let n = domain.n();
        if !(self.background > 0.0) || !self.background.is_finite() {
            return Err(Error::Config("background K0 must be positive".into()));
        }
        if !self.tilt.is_empty() && self.tilt.len() != n {
            return Err(Error::Config(format!("tilt must have {n} entries")));
        }
        if !self.curvature.is_finite() {
            return Err(Error::Config("curvature must be finite".into()));
        }
        for (i, r) in self.records.iter().enumerate() {
            let bad = |m: &str| Error::Config(format!("record {i}: {m}"));
            if r.y.len() != n || r.b.len() != n {
                return Err(bad("y and b must have n entries"));
            }
            if !(r.beta > 1.0) {
                return Err(bad("beta must exceed 1"));
            }
            if r.b.iter().any(|b| *b == 0.0 || !b.is_finite()) {
                return Err(bad("every b_k must be nonzero"));
            }
            if !(r.value > 0.0) {
                return Err(bad("K(y) must be positive"));
            }
            if !(r.radius > 0.0) || domain.boundary_distance(&r.y).map_or(true, |d| d <= r.radius) {
                return Err(bad("patch must lie inside the domain"));
            }
            for (j, s) in self.records.iter().enumerate().skip(i + 1) {
                let d: Vec<f64> = r.y.iter().zip(&s.y).map(|(a, b)| a - b).collect();
                if norm(&d) < r.radius + s.radius {
                    return Err(bad(&format!("patch overlaps record {j}")));
                }
            }
        }
        Ok(())
    }

    pub fn background_value(&self, x: &[f64]) -> f64 {
        let t: f64 = self.tilt.iter().zip(x).map(|(t, x)| t * x).sum();
        self.background + t + 0.5 * self.curvature * x.iter().map(|v| v * v).sum::<f64>()
    }

    fn background_grad(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len()).map(|i| self.tilt.get(i).copied().unwrap_or(0.0) + self.curvature * x[i]).collect()
    }

    /// Index of the record whose patch contains `x`.
    pub fn patch_at(&self, x: &[f64]) -> Option<usize> {
        self.records.iter().position(|r| {
            let d: f64 = x.iter().zip(&r.y).map(|(a, b)| (a - b) * (a - b)).sum();
            d < r.radius * r.radius
        })
    }

    /// K(x) without domain checks.
    pub fn value(&self, x: &[f64]) -> f64 {
        let bg = self.background_value(x);
        match self.patch_at(x) {
            None => bg,
            Some(i) => {
                let r = &self.records[i];
                let (w, _) = r.weight(x);
                w * r.normal_form(x) + (1.0 - w) * bg
            }
        }
    }

    /// ∇K(x) without domain checks.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let bg = self.background_grad(x);
        match self.patch_at(x) {
            None => bg,
            Some(i) => {
                let r = &self.records[i];
                let (w, dw) = r.weight(x);
                let nf = r.normal_form_grad(x);
                let jump = r.normal_form(x) - self.background_value(x);
                (0..x.len()).map(|k| w * nf[k] + (1.0 - w) * bg[k] + jump * dw[k]).collect()
            }
        }
    }

    /// K with the kink of record `i` removed: smooth near `y_i`.
    pub fn value_without_kink(&self, x: &[f64], i: usize) -> f64 {
        let r = &self.records[i];
        let (w, _) = r.weight(x);
        self.value(x) - w * r.kink(x)
    }
}

fn in_closure(domain: &DomainModel, x: &[f64]) -> Result<()> {
    let outside: f64 = x
        .iter()
        .zip(domain.center())
        .zip(domain.semi_axes())
        .map(|((x, c), s)| ((x - c) / s).powi(2))
        .sum();
    if x.len() != domain.n() || !(outside <= 1.0 + 1e-12) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(())
}

pub fn k_eval(model: &KModel, domain: &DomainModel, x: &[f64]) -> Result<f64> {
    in_closure(domain, x)?;
    Ok(model.value(x))
}

pub fn k_grad(model: &KModel, domain: &DomainModel, x: &[f64]) -> Result<Vec<f64>> {
    in_closure(domain, x)?;
    Ok(model.gradient(x))
}

/// Outcome of probing a record's normal form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlatnessReport {
    pub beta_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
    /// Largest of `|R(z)| |z|^{-β}` and `|∇R(z)| |z|^{1-β}` over the probes.
    pub max_remainder_ratio: f64,
}

/// Recovers β and b along each axis by log–log regression of `K(y+r e_k) - K(y)`
/// over `samples` radii inside the half-patch, and measures the remainder of
/// the declared normal form on radii `10^{-1} … 10^{-4}` (scaled into the patch).
pub fn verify_flatness(model: &KModel, record: usize, samples: usize) -> Result<FlatnessReport> {
    let rec = model.records.get(record).ok_or_else(|| Error::Config(format!("no record {record}")))?;
    let n = rec.y.len();
    let samples = samples.max(2);
    let rmax = 0.4 * rec.radius;
    let radii: Vec<f64> = (0..samples).map(|j| rmax * 10f64.powf(-3.0 * j as f64 / (samples - 1) as f64)).collect();
    let k_y = model.value(&rec.y);
    let mut beta_hat = Vec::with_capacity(n);
    let mut b_hat = Vec::with_capacity(n);
    for k in 0..n {
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| {
                let mut x = rec.y.clone();
                x[k] += r;
                (r.ln(), model.value(&x) - k_y)
            })
            .collect();
        if pts.iter().all(|p| p.1 == pts[0].1) || pts.iter().any(|p| p.1 == 0.0) {
            return Err(Error::DegenerateData(format!("axis {k}: K is flat along the probe")));
        }
        let sign = pts[0].1.signum();
        if pts.iter().any(|p| p.1.signum() != sign) {
            return Err(Error::DegenerateData(format!("axis {k}: increment changes sign")));
        }
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1.abs().ln()));
        let (mx, my) = (sx / m, sy / m);
        let (sxx, sxy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx).powi(2), b + (p.0 - mx) * (p.1.abs().ln() - my)));
        let slope = sxy / sxx;
        beta_hat.push(slope);
        b_hat.push(sign * (my - slope * mx).exp());
    }
    let mut worst = 0.0f64;
    for j in 1..=4 {
        let r = (10f64.powi(-j)).min(rmax);
        // A fixed oblique direction and the coordinate diagonal.
        for dir in [oblique(n), vec![1.0 / (n as f64).sqrt(); n]] {
            let x: Vec<f64> = rec.y.iter().zip(&dir).map(|(y, d)| y + r * d).collect();
            let z: Vec<f64> = dir.iter().map(|d| r * d).collect();
            let rem = model.value(&x) - rec.normal_form(&x);
            let grad = model.gradient(&x);
            let nf = rec.normal_form_grad(&x);
            let grad_rem = norm(&grad.iter().zip(&nf).map(|(a, b)| a - b).collect::<Vec<_>>());
            let zr = norm(&z);
            worst = worst.max(rem.abs() * zr.powf(-rec.beta)).max(grad_rem * zr.powf(1.0 - rec.beta));
        }
    }
    Ok(FlatnessReport { beta_hat, b_hat, max_remainder_ratio: worst })
}

fn oblique(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * i as f64).collect();
    let s = norm(&v);
    v.iter().map(|x| x / s).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ConditionA {
    pub holds: bool,
    pub min_normal_derivative: f64,
}

/// `∂K/∂ν ≠ 0` on ∂Ω, sampled.
pub fn check_condition_a(model: &KModel, domain: &DomainModel, samples: usize, seed: u64) -> ConditionA {
    let min = domain
        .boundary_samples(samples, seed)
        .iter()
        .map(|(x, nu)| model.gradient(x).iter().zip(nu).map(|(g, v)| g * v).sum::<f64>().abs())
        .fold(f64::INFINITY, f64::min);
    ConditionA { holds: min > 1e-8, min_normal_derivative: min }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{directional_fd, Region};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(n: usize) -> KModel {
        KModel {
            background: 2.0,
            tilt: vec![0.3; n],
            curvature: 0.5,
            records: vec![CriticalPointRecord {
                y: (0..n).map(|i| if i == 0 { 0.3 } else { 0.0 }).collect(),
                beta: 2.5,
                b: (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -2.0 }).collect(),
                radius: 0.3,
                value: 1.8,
            }],
        }
    }

    #[test]
    fn value_at_critical_point() {
        let m = model(5);
        assert_eq!(m.value(&m.records[0].y), 1.8);
    }

    #[test]
    fn quadratic_patch() {
        let n = 6;
        let rec = CriticalPointRecord { y: vec![0.0; n], beta: 2.0, b: vec![1.0; n], radius: 0.5, value: 1.0 };
        let m = KModel { records: vec![rec], ..KModel::constant(1.0) };
        let x = [0.1, -0.05, 0.0, 0.1, 0.02, 0.0];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((m.value(&x) - (1.0 + r2)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 5;
        let m = model(n);
        let d = DomainModel::unit_ball(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            // Concentrate samples on the patch and its transition annulus.
            let x: Vec<f64> = m.records[0].y.iter().map(|y| y + rng.gen_range(-0.3..0.3)).collect();
            if !d.contains(&x) {
                continue;
            }
            let g = k_grad(&m, &d, &x).unwrap();
            let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fd = directional_fd(|z: &[f64]| m.value(z), &x, &h, &[1e-4, 5e-5]);
            let an: f64 = g.iter().zip(&h).map(|(a, b)| a * b).sum();
            assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
        }
    }

    #[test]
    fn continuous_across_the_patch_edge() {
        let n = 5;
        let m = model(n);
        let rec = &m.records[0];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..200 {
            let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let s = norm(&u);
            u.iter_mut().for_each(|v| *v /= s);
            for t in [0.5, 1.0] {
                let at = |r: f64| -> f64 {
                    let x: Vec<f64> = rec.y.iter().zip(&u).map(|(y, u)| y + r * u).collect();
                    m.value(&x)
                };
                let r = t * rec.radius;
                assert!((at(r * (1.0 - 1e-13)) - at(r * (1.0 + 1e-13))).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn flatness_recovers_normal_form() {
        let m = model(6);
        let rep = verify_flatness(&m, 0, 12).unwrap();
        for k in 0..6 {
            assert!((rep.beta_hat[k] - 2.5).abs() < 1e-3);
            assert!((rep.b_hat[k] - m.records[0].b[k]).abs() < 1e-3);
        }
        assert!(rep.max_remainder_ratio < 1e-10);
        let degenerate = KModel { records: vec![CriticalPointRecord { b: vec![0.0; 6], ..m.records[0].clone() }], ..m };
        assert!(matches!(verify_flatness(&degenerate, 0, 8), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn condition_a_cases() {
        let d = DomainModel::unit_ball(5).unwrap();
        assert!(!check_condition_a(&KModel::constant(1.0), &d, 500, 1).holds);
        let c = 0.4;
        let tilted = KModel { tilt: vec![c, 0.0, 0.0, 0.0, 0.0], ..KModel::constant(1.0) };
        let res = check_condition_a(&tilted, &d, 500, 1);
        let expect = d.boundary_samples(500, 1).iter().map(|(_, nu)| c * nu[0].abs()).fold(f64::INFINITY, f64::min);
        assert!((res.min_normal_derivative - expect).abs() < 1e-15);
        let mut m = model(5);
        m.tilt = vec![0.0; 5];
        m.curvature = 1.0;
        assert!(check_condition_a(&m, &d, 2000, 2).holds);
    }

    #[test]
    fn validation() {
        let d = DomainModel::unit_ball(5).unwrap();
        assert!(model(5).validate(&d).is_ok());
        let mut m = model(5);
        m.records[0].beta = 1.0;
        assert!(m.validate(&d).is_err());
        let mut m = model(5);
        m.records[0].y[0] = 0.8;
        assert!(m.validate(&d).is_err());
    }
}
