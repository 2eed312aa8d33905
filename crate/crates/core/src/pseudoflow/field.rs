//! Pseudo-gradient fields on the reduced parameters `(αᵢ, aᵢ, λᵢ)`.
//!
//! Fields are assembled as coefficients of the directions `λᵢ∂/∂λᵢ` and
//! `(1/λᵢ)∂/∂(aᵢ)_k` applied to `αᵢPδᵢ`; in parameter space a dilation
//! coefficient `c` means `dλᵢ = cλᵢ` and a translation coefficient `c`
//! means `d(aᵢ)_k = c/λᵢ`. The weights `αᵢ` are not moved by any field.
//!
//! Index-set thresholds (`1/2`, `1/10`, `2`) and the cut-off edges are
//! blended across a relative band of width `hysteresis` so that the
//! assembled field stays continuous.

use serde::{Deserialize, Serialize};

use super::cutoff::{cutoffs, ramp, CutoffParams, CutoffValues};
use super::moment::MomentCache;
use crate::bubble::{Configuration, DirectionKind, PairingDirection};
use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::infinity::{build_matrix, RHO_ZERO};
use crate::kmodel::{classify, ClassificationReport, KModel, PointClass};
use crate::numerics::{sphere_area, OdeControl, QuadratureSpec};
use statrs::function::beta::beta as beta_fn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct PseudoflowParams {
    #[serde(default)]
    pub cutoff: CutoffParams,
    /// Gauge of the neighbourhood: `λᵢ ≥ 1/ε`, `ε_ij < ε`.
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    /// Weight of the translation pushes `Xᵢ` added to a combined field.
    #[serde(default = "defaults::small")]
    pub m1: f64,
    /// Weight of the differential-speed dilation drift.
    #[serde(default = "defaults::small")]
    pub m2: f64,
    #[serde(default = "defaults::hysteresis")]
    pub hysteresis: f64,
    #[serde(default = "defaults::lambda_max")]
    pub lambda_max: f64,
    /// Coefficient norm below which a bounded state counts as stationary.
    #[serde(default = "defaults::grad_tol")]
    pub grad_tol: f64,
    /// Number of trailing samples over which the centers must settle.
    #[serde(default = "defaults::window")]
    pub cauchy_window: usize,
    /// Settling radius, relative to the patch radius.
    #[serde(default = "defaults::cauchy_radius")]
    pub cauchy_radius: f64,
    #[serde(default = "defaults::ode")]
    pub ode: OdeControl<f64>,
}

mod defaults {
    use crate::numerics::OdeControl;
    pub fn epsilon() -> f64 {
        0.1
    }
    pub fn small() -> f64 {
        0.1
    }
    pub fn hysteresis() -> f64 {
        0.05
    }
    pub fn lambda_max() -> f64 {
        1e4
    }
    pub fn grad_tol() -> f64 {
        1e-8
    }
    pub fn window() -> usize {
        5
    }
    pub fn cauchy_radius() -> f64 {
        1e-3
    }
    pub fn ode() -> OdeControl<f64> {
        OdeControl { initial_step: 0.05, max_step: 0.5, rel_tol: 1e-6, max_steps: 400 }
    }
}

impl Default for PseudoflowParams {
    fn default() -> Self {
        Self {
            cutoff: CutoffParams::default(),
            epsilon: defaults::epsilon(),
            m1: defaults::small(),
            m2: defaults::small(),
            hysteresis: defaults::hysteresis(),
            lambda_max: defaults::lambda_max(),
            grad_tol: defaults::grad_tol(),
            cauchy_window: defaults::window(),
            cauchy_radius: defaults::cauchy_radius(),
            ode: defaults::ode(),
        }
    }
}

impl PseudoflowParams {
    pub fn validate(&self) -> Result<()> {
        self.cutoff.validate()?;
        self.ode.validate()?;
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !unit(self.epsilon) || !unit(self.m1) || !unit(self.m2) || !unit(self.hysteresis) {
            return Err(Error::Config("epsilon, m1, m2 and hysteresis must lie in (0, 1)".into()));
        }
        if !(self.lambda_max > 1.0 / self.epsilon) {
            return Err(Error::Config("lambda-max must exceed 1/epsilon".into()));
        }
        if !(self.grad_tol >= 0.0) || !(self.cauchy_radius > 0.0) || self.cauchy_window < 2 {
            return Err(Error::Config("grad-tol, cauchy-radius and cauchy-window out of range".into()));
        }
        Ok(())
    }
}

/// A configuration together with the critical point each mass is
/// attached to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReducedState {
    pub config: Configuration,
    pub records: Vec<usize>,
}

impl ReducedState {
    /// Attaches every mass to the record whose patch contains its center.
    pub fn assign(config: Configuration, k: &KModel) -> Result<Self> {
        let records = config
            .masses
            .iter()
            .enumerate()
            .map(|(i, m)| k.patch_at(&m.a).ok_or_else(|| Error::Region(format!("mass {i} at {:?} lies in no patch", m.a))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { config, records })
    }

    /// Index of the first mass outside its own patch.
    pub fn outside_patch(&self, k: &KModel) -> Option<usize> {
        self.config.masses.iter().zip(&self.records).position(|(m, &r)| {
            let rec = &k.records[r];
            m.a.iter().zip(&rec.y).map(|(a, y)| (a - y) * (a - y)).sum::<f64>() >= rec.radius * rec.radius
        })
    }

    pub fn check(&self, k: &KModel) -> Result<()> {
        if self.records.len() != self.config.len() || self.records.iter().any(|&r| r >= k.records.len()) {
            return Err(Error::Config("record assignment does not match the configuration".into()));
        }
        match self.outside_patch(k) {
            Some(i) => Err(Error::Region(format!("mass {i} left the patch of record {}", self.records[i]))),
            None => Ok(()),
        }
    }
}

/// Parameter-space increments `(dα, da, dλ)` and the region that
/// produced them (`|` joins regions blended at this state).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Tangent {
    pub d_alpha: Vec<f64>,
    pub d_a: Vec<Vec<f64>>,
    pub d_lambda: Vec<f64>,
    pub region: String,
}

impl Tangent {
    pub fn zeros(config: &Configuration) -> Self {
        let n = config.masses.first().map_or(0, |m| m.a.len());
        Self { d_alpha: vec![0.0; config.len()], d_a: vec![vec![0.0; n]; config.len()], d_lambda: vec![0.0; config.len()], region: String::new() }
    }

    /// Coefficients on the directions of [`PairingDirection`], skipping zeros.
    pub fn coefficients(&self, config: &Configuration) -> Vec<(PairingDirection, f64)> {
        let mut out = Vec::new();
        for (i, m) in config.masses.iter().enumerate() {
            let mut push = |kind, c: f64| {
                if c != 0.0 {
                    out.push((PairingDirection { mass: i, kind }, c));
                }
            };
            push(DirectionKind::Dilation, self.d_lambda[i] / m.lambda);
            for (k, da) in self.d_a[i].iter().enumerate() {
                push(DirectionKind::Translation(k), da * m.lambda);
            }
            push(DirectionKind::Weight, self.d_alpha[i] / m.alpha);
        }
        out
    }

    /// Euclidean norm of the direction coefficients.
    pub fn norm(&self, config: &Configuration) -> f64 {
        self.coefficients(config).iter().map(|(_, c)| c * c).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Coeffs {
    pub dil: Vec<f64>,
    pub tr: Vec<Vec<f64>>,
}

impl Coeffs {
    fn zeros(p: usize, n: usize) -> Self {
        Self { dil: vec![0.0; p], tr: vec![vec![0.0; n]; p] }
    }

    fn add_mass(&mut self, other: &Coeffs, i: usize, w: f64) {
        if w == 0.0 {
            return;
        }
        self.dil[i] += w * other.dil[i];
        for (a, b) in self.tr[i].iter_mut().zip(&other.tr[i]) {
            *a += w * b;
        }
    }

    fn add(&mut self, other: &Coeffs, w: f64) {
        for i in 0..self.dil.len() {
            self.add_mass(other, i, w);
        }
    }

    fn tangent(&self, config: &Configuration, region: String) -> Tangent {
        Tangent {
            d_alpha: vec![0.0; config.len()],
            d_a: config.masses.iter().zip(&self.tr).map(|(m, t)| t.iter().map(|c| c / m.lambda).collect()).collect(),
            d_lambda: config.masses.iter().zip(&self.dil).map(|(m, c)| c * m.lambda).collect(),
            region,
        }
    }
}

/// Per-mass data the region logic reads.
#[derive(Debug, Clone)]
struct MassInfo {
    record: usize,
    class: PointClass,
    plus: bool,
    beta: f64,
    /// `aᵢ - y`.
    offset: Vec<f64>,
    /// `λᵢ|aᵢ - y|`.
    scaled_distance: f64,
    /// `λᵢ^β`.
    scale_power: f64,
    lambda: f64,
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Everything the fields, the flow and the checks share.
pub struct FlowContext<'a> {
    pub domain: &'a DomainModel,
    pub k: &'a KModel,
    pub classes: ClassificationReport,
    pub params: PseudoflowParams,
    pub spec: QuadratureSpec,
    pub(crate) moments: MomentCache,
    /// `∫ z₁² (1+|z|²)^{-(n+1)}`: the large-shift slope of the translation moment.
    second_moment: f64,
}

impl<'a> FlowContext<'a> {
    pub fn new(domain: &'a DomainModel, k: &'a KModel, params: PseudoflowParams, spec: QuadratureSpec) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        k.validate(domain)?;
        let classes = classify(k, domain)?;
        let nf = domain.n() as f64;
        let second_moment = sphere_area::<f64>(domain.n()) / (2.0 * nf) * beta_fn(nf / 2.0 + 1.0, nf / 2.0);
        Ok(Self { domain, k, classes, params, spec, moments: MomentCache::new(), second_moment })
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    pub fn cutoffs(&self, t: f64) -> CutoffValues {
        cutoffs(&self.params.cutoff, t)
    }

    fn band(&self, t: f64, edge: f64) -> f64 {
        ramp(t, edge, edge * (1.0 + self.params.hysteresis))
    }

    fn info(&self, state: &ReducedState) -> Vec<MassInfo> {
        state
            .config
            .masses
            .iter()
            .zip(&state.records)
            .map(|(m, &r)| {
                let rec = &self.k.records[r];
                let cls = &self.classes.records[r];
                let offset: Vec<f64> = m.a.iter().zip(&rec.y).map(|(a, y)| a - y).collect();
                let dist = offset.iter().map(|v| v * v).sum::<f64>().sqrt();
                MassInfo {
                    record: r,
                    class: cls.class,
                    plus: cls.plus,
                    beta: rec.beta,
                    scaled_distance: m.lambda * dist,
                    scale_power: m.lambda.powf(rec.beta),
                    offset,
                    lambda: m.lambda,
                }
            })
            .collect()
    }

    /// `b_k sign(a-y)_k` far out, and the normalized shifted moment
    /// `b_k M(s_k) / (β m₂ (1+|s_k|)^{β-1})` near the kink, which tends to
    /// the same limit and vanishes at `s_k = 0`.
    fn push(&self, info: &MassInfo) -> Result<Vec<f64>> {
        let rec = &self.k.records[info.record];
        let n = self.n();
        let mut out = vec![0.0; n];
        for k in 0..n {
            let s = info.lambda * info.offset[k];
            let far = self.cutoffs(s).theta3;
            let mut v = far * sign(s);
            if far < 1.0 {
                let m = self.moments.translation(n, info.beta, s)?;
                v += (1.0 - far) * m / (info.beta * self.second_moment * (1.0 + s.abs()).powf(info.beta - 1.0));
            }
            out[k] = rec.b[k] * v;
        }
        Ok(out)
    }

    /// Translation part shared by the `β ≤ n-4` single-mass fields:
    /// `θ₃ b_k sign(a-y)_k + θ₂ b_k M(λ(a-y)_k)`.
    fn near_translation(&self, info: &MassInfo, cut: &CutoffValues) -> Result<Vec<f64>> {
        let rec = &self.k.records[info.record];
        let n = self.n();
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut v = cut.theta3 * sign(info.offset[k]);
            if cut.theta2 > 0.0 {
                v += cut.theta2 * self.moments.translation(n, info.beta, info.lambda * info.offset[k])?;
            }
            out[k] = rec.b[k] * v;
        }
        Ok(out)
    }

    fn single(&self, info: &MassInfo) -> Result<(f64, Vec<f64>, &'static str)> {
        let rec = &self.k.records[info.record];
        let n = self.n();
        match info.class {
            PointClass::Below => {
                let cut = self.cutoffs(info.scaled_distance);
                Ok((-cut.theta1 * rec.sum_b(), self.near_translation(info, &cut)?, "V1"))
            }
            PointClass::Equal => {
                let cut = self.cutoffs(info.scaled_distance);
                let toward = if info.plus { 1.0 } else { -1.0 };
                Ok((cut.theta1 * toward, self.near_translation(info, &cut)?, "V2"))
            }
            PointClass::Above => {
                let d = info.scaled_distance / info.lambda;
                let s = info.lambda.powf(n as f64 - 4.0) * d.powf(info.beta);
                let th = self.cutoffs(s).theta1;
                let tr = (0..n).map(|k| (1.0 - th) * rec.b[k] * sign(info.offset[k])).collect();
                Ok((th, tr, "V3"))
            }
        }
    }

    pub fn single_mass_field(&self, state: &ReducedState) -> Result<Tangent> {
        if state.config.len() != 1 {
            return Err(Error::Config("the single-mass field needs exactly one mass".into()));
        }
        state.check(self.k)?;
        self.single_unchecked(state)
    }

    fn single_unchecked(&self, state: &ReducedState) -> Result<Tangent> {
        let info = self.info(state);
        let (dil, tr, tag) = self.single(&info[0])?;
        let c = Coeffs { dil: vec![dil], tr: vec![tr] };
        Ok(c.tangent(&state.config, tag.to_string()))
    }

    pub fn multi_mass_field(&self, state: &ReducedState) -> Result<Tangent> {
        if state.config.len() < 2 {
            return Err(Error::Config("the multi-mass field needs at least two masses".into()));
        }
        state.check(self.k)?;
        self.multi_unchecked(state)
    }

    /// Dispatches on the number of masses.
    pub fn field(&self, state: &ReducedState) -> Result<Tangent> {
        state.check(self.k)?;
        self.field_unchecked(state)
    }

    /// As [`Self::field`] without the patch test: a mass just outside its
    /// patch keeps the field of its record.
    pub(crate) fn field_unchecked(&self, state: &ReducedState) -> Result<Tangent> {
        if state.config.len() == 1 {
            self.single_unchecked(state)
        } else {
            self.multi_unchecked(state)
        }
    }

    fn multi_unchecked(&self, state: &ReducedState) -> Result<Tangent> {
        let info = self.info(state);
        let ranks = ranks(&info);
        let group = |c: PointClass| -> Vec<usize> { (0..info.len()).filter(|&i| info[i].class == c).collect() };
        let (below, equal, above) = (group(PointClass::Below), group(PointClass::Equal), group(PointClass::Above));
        let mut tags = Vec::new();
        let mut total = self.zeros(&info);

        let good_below = distinct(&info, &below) && below.iter().all(|&i| info[i].plus);
        let good_equal = self.equal_is_good(&info, &equal)?;
        if below.is_empty() || equal.is_empty() || (good_below && good_equal) {
            total.add(&self.below_field(&info, &below, &mut tags)?, 1.0);
            total.add(&self.equal_field(&info, &equal, &ranks, &mut tags)?, 1.0);
        } else if !good_below {
            // Masses of the n-4 group that are as concentrated as the worst
            // β < n-4 mass are pushed and drifted; the rest keep their field.
            let floor = below.iter().map(|&i| info[i].scale_power).fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = equal.iter().map(|&i| self.band(info[i].scale_power / floor, 0.1)).collect();
            total.add(&self.below_field(&info, &below, &mut tags)?, 1.0);
            let rest: Vec<usize> = equal.iter().zip(&w).filter(|(_, w)| **w < 1.0).map(|(i, _)| *i).collect();
            let sub = self.equal_field(&info, &rest, &ranks, &mut tags)?;
            for (&i, &wi) in equal.iter().zip(&w) {
                total.add_mass(&sub, i, 1.0 - wi);
                self.add_push_and_drift(&mut total, &info, i, ranks[i], wi)?;
            }
            tags.push("L43a".into());
        } else {
            let floor = equal.iter().map(|&i| info[i].scale_power).fold(f64::INFINITY, f64::min);
            let w: Vec<f64> = below.iter().map(|&i| self.band(info[i].scale_power / floor, 0.1)).collect();
            total.add(&self.equal_field(&info, &equal, &ranks, &mut tags)?, 1.0);
            let rest: Vec<usize> = below.iter().zip(&w).filter(|(_, w)| **w < 1.0).map(|(i, _)| *i).collect();
            let sub = self.below_field(&info, &rest, &mut tags)?;
            for (&i, &wi) in below.iter().zip(&w) {
                total.add_mass(&sub, i, 1.0 - wi);
                self.add_push_and_drift(&mut total, &info, i, ranks[i], wi)?;
            }
            tags.push("L43b".into());
        }
        for &i in &above {
            let (dil, tr, _) = self.single(&info[i])?;
            total.dil[i] += dil;
            total.tr[i].iter_mut().zip(&tr).for_each(|(a, b)| *a += b);
        }
        if !above.is_empty() {
            tags.push("V3".into());
        }
        self.collision_repulsion(&mut total, &info, &above);
        Ok(total.tangent(&state.config, tags.join("+")))
    }

    fn zeros(&self, info: &[MassInfo]) -> Coeffs {
        Coeffs::zeros(info.len(), self.n())
    }

    fn add_push_and_drift(&self, total: &mut Coeffs, info: &[MassInfo], i: usize, rank: usize, w: f64) -> Result<()> {
        if w == 0.0 {
            return Ok(());
        }
        let push = self.push(&info[i])?;
        total.dil[i] -= w * self.params.m2 * 2f64.powi(rank as i32);
        total.tr[i].iter_mut().zip(&push).for_each(|(a, b)| *a += w * self.params.m1 * b);
        Ok(())
    }

    /// Distinct, all-plus, and a positive interaction eigenvalue.
    fn equal_is_good(&self, info: &[MassInfo], members: &[usize]) -> Result<bool> {
        if members.is_empty() {
            return Ok(true);
        }
        if !distinct(info, members) || !members.iter().all(|&i| info[i].plus) {
            return Ok(false);
        }
        let recs: Vec<usize> = members.iter().map(|&i| info[i].record).collect();
        Ok(build_matrix(&recs, self.k, self.domain, &self.classes)?.rho > RHO_ZERO)
    }

    /// Lemma-style field for masses at flatness `β < n-4`.
    fn below_field(&self, info: &[MassInfo], members: &[usize], tags: &mut Vec<String>) -> Result<Coeffs> {
        if members.is_empty() {
            return Ok(self.zeros(info));
        }
        if distinct(info, members) {
            self.distinct_below(info, members, tags)
        } else {
            self.colliding_below(info, members, tags)
        }
    }

    fn distinct_below(&self, info: &[MassInfo], members: &[usize], tags: &mut Vec<String>) -> Result<Coeffs> {
        let half = self.params.cutoff.delta / 2.0;
        let far: Vec<f64> = members.iter().map(|&i| self.band(info[i].scaled_distance, half)).collect();
        let w3 = far.iter().copied().fold(0.0, f64::max);
        let mut out = self.zeros(info);
        if w3 < 1.0 {
            let (near, tag) = self.near_field(info, members);
            out.add(&near, 1.0 - w3);
            tags.push(if w3 > 0.0 { format!("{tag}|W3") } else { tag.into() });
        }
        if w3 > 0.0 {
            // The least concentrated mass that sits away from its critical
            // point fixes the scale; masses well below it use the near field.
            let scale = members
                .iter()
                .zip(&far)
                .filter(|(_, f)| **f > 0.0)
                .map(|(&i, f)| info[i].scale_power / f)
                .fold(f64::INFINITY, f64::min);
            let inner: Vec<f64> = members.iter().map(|&i| 1.0 - self.band(info[i].scale_power / scale, 0.5)).collect();
            let kept: Vec<usize> = members.iter().zip(&inner).filter(|(_, v)| **v > 0.0).map(|(i, _)| *i).collect();
            let (near, _) = self.near_field(info, &kept);
            for (&i, &v) in members.iter().zip(&inner) {
                out.add_mass(&near, i, w3 * v);
                let push = self.push(&info[i])?;
                out.dil[i] -= w3 * (1.0 - v);
                out.tr[i].iter_mut().zip(&push).for_each(|(a, b)| *a += w3 * (1.0 - v) * b);
            }
            if w3 >= 1.0 {
                tags.push("W3".into());
            }
        }
        Ok(out)
    }

    /// All masses near their critical points: raise every scale when all
    /// are plus; otherwise raise only those well below the least
    /// concentrated minus mass and lower the rest.
    fn near_field(&self, info: &[MassInfo], members: &[usize]) -> (Coeffs, &'static str) {
        let mut out = self.zeros(info);
        let floor = members.iter().filter(|&&i| !info[i].plus).map(|&i| info[i].scale_power).fold(f64::INFINITY, f64::min);
        if floor.is_infinite() {
            members.iter().for_each(|&i| out.dil[i] = 1.0);
            return (out, "W1");
        }
        for &i in members {
            let raise = 1.0 - self.band(info[i].scale_power / floor, 0.5);
            out.dil[i] = 2.0 * raise - 1.0;
        }
        (out, "W2")
    }

    /// Two masses share a critical point: lower the scales with the
    /// ratio weights `ψ̄`, plus a small copy of the field of the least
    /// concentrated masses (one per critical point).
    fn colliding_below(&self, info: &[MassInfo], members: &[usize], tags: &mut Vec<String>) -> Result<Coeffs> {
        let mut out = self.zeros(info);
        let delta = self.params.cutoff.delta;
        let far: Vec<f64> = members.iter().map(|&i| self.band(info[i].scaled_distance, delta)).collect();
        let any_far = far.iter().copied().fold(0.0, f64::max);
        for (&i, &f) in members.iter().zip(&far) {
            if f > 0.0 {
                let push = self.push(&info[i])?;
                out.tr[i].iter_mut().zip(&push).for_each(|(a, b)| *a += f * b);
            }
        }
        if any_far < 1.0 {
            let low = members.iter().map(|&i| info[i].lambda).fold(f64::INFINITY, f64::min);
            let mut same_order: Vec<(usize, f64)> = members
                .iter()
                .map(|&i| (i, 1.0 - self.band(info[i].lambda / low, 2.0)))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            same_order.sort_by(|a, b| info[a.0].lambda.total_cmp(&info[b.0].lambda));
            let mut seen = Vec::new();
            same_order.retain(|(i, _)| {
                let fresh = !seen.contains(&info[*i].record);
                seen.push(info[*i].record);
                fresh
            });
            let lead: Vec<usize> = same_order.iter().map(|(i, _)| *i).collect();
            let sub = self.distinct_below(info, &lead, &mut Vec::new())?;
            for (i, w) in same_order {
                out.add_mass(&sub, i, (1.0 - any_far) * self.params.m1 * w);
            }
        }
        tags.push("W4".into());
        Ok(out)
    }

    /// Analog for `β = n-4`: the single-mass field per mass, plus the
    /// differential-speed drift when the tuple has `ρ ≤ 0`.
    fn equal_field(&self, info: &[MassInfo], members: &[usize], ranks: &[usize], tags: &mut Vec<String>) -> Result<Coeffs> {
        let mut out = self.zeros(info);
        if members.is_empty() {
            return Ok(out);
        }
        for &i in members {
            let (dil, tr, _) = self.single(&info[i])?;
            out.dil[i] = dil;
            out.tr[i] = tr;
        }
        tags.push("W2'".into());
        if members.len() >= 2 && distinct(info, members) && members.iter().all(|&i| info[i].plus) {
            let recs: Vec<usize> = members.iter().map(|&i| info[i].record).collect();
            if build_matrix(&recs, self.k, self.domain, &self.classes)?.rho <= RHO_ZERO {
                for &i in members {
                    out.dil[i] -= self.params.m2 * 2f64.powi(ranks[i] as i32);
                }
                tags.push("Z".into());
            }
        }
        Ok(out)
    }

    /// `-ψ̄(λ_j)` on every mass that shares its critical point, outside the
    /// `β > n-4` group (whose field already lowers nothing).
    fn collision_repulsion(&self, total: &mut Coeffs, info: &[MassInfo], skip: &[usize]) {
        for j in 0..info.len() {
            if skip.contains(&j) || !(0..info.len()).any(|i| i != j && info[i].record == info[j].record) {
                continue;
            }
            let psi_bar: f64 = (0..info.len()).filter(|&i| i != j).map(|i| self.cutoffs(info[j].lambda / info[i].lambda).psi).sum();
            total.dil[j] -= psi_bar;
        }
    }
}

fn distinct(info: &[MassInfo], members: &[usize]) -> bool {
    members.iter().enumerate().all(|(a, &i)| members[a + 1..].iter().all(|&j| info[i].record != info[j].record))
}

/// 1-based rank of each mass by increasing `λ`.
fn ranks(info: &[MassInfo]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..info.len()).collect();
    order.sort_by(|&a, &b| info[a].lambda.total_cmp(&info[b].lambda).then(a.cmp(&b)));
    let mut out = vec![0; info.len()];
    for (r, i) in order.into_iter().enumerate() {
        out[i] = r + 1;
    }
    out
}

/// The differential-speed drift `-Σ 2^i λᵢ∂/∂λᵢ` on `members`, masses
/// ranked by increasing `λ`.
pub fn differential_drift(config: &Configuration, members: &[usize]) -> Tangent {
    let mut order: Vec<usize> = (0..config.len()).collect();
    order.sort_by(|&a, &b| config.masses[a].lambda.total_cmp(&config.masses[b].lambda).then(a.cmp(&b)));
    let mut t = Tangent::zeros(config);
    for (r, i) in order.into_iter().enumerate() {
        if members.contains(&i) {
            t.d_lambda[i] = -(2f64.powi(r as i32 + 1)) * config.masses[i].lambda;
        }
    }
    t.region = "Z".into();
    t
}
