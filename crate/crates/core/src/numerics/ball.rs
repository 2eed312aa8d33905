//! Integration over star-shaped regions by polar product rules.
//!
//! A rule is centered at a chosen point (a bubble center, or a declared
//! singularity); radial panels grow geometrically away from it so that a
//! concentration at scale `1/scale` is resolved.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::quadrature::{gauss_jacobi, gauss_legendre, sphere_area, QuadratureSpec, Scheme};
use crate::error::{Error, Result};

/// Region that is star-shaped with respect to every point we center at.
pub trait Region {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    /// Distance from interior `origin` to the boundary along unit `dir`.
    fn ray_exit(&self, origin: &[f64], dir: &[f64]) -> f64;
    /// A ball containing the region.
    fn bounding_ball(&self) -> (Vec<f64>, f64);
}

/// Directions and weights on the unit sphere of ℝⁿ.
///
/// Product of Gauss–Gegenbauer rules in the successive polar cosines and an
/// offset trapezoid rule in the last azimuth. The rule is exact for
/// spherical polynomials of degree below `2 * order` and symmetric under
/// every coordinate sign flip.
#[derive(Debug, Clone)]
pub struct PolarRule {
    pub dim: usize,
    pub dirs: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

fn circle(order: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = 2 * order;
    let h = std::f64::consts::TAU / m as f64;
    let dirs = (0..m).map(|j| {
        let phi = (j as f64 + 0.5) * h;
        vec![phi.cos(), phi.sin()]
    });
    (dirs.collect(), vec![h; m])
}

/// Lifts a rule on S^{d-2} to S^{d-1} through `ω = (t, √(1-t²) ω')`.
fn lift(inner: &(Vec<Vec<f64>>, Vec<f64>), t_rule: &(Vec<f64>, Vec<f64>)) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (dirs, weights) = inner;
    let mut nd = Vec::with_capacity(dirs.len() * t_rule.0.len());
    let mut nw = Vec::with_capacity(nd.capacity());
    for (&t, &tw) in t_rule.0.iter().zip(&t_rule.1) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        for (dir, &w) in dirs.iter().zip(weights) {
            let mut v = Vec::with_capacity(dir.len() + 1);
            v.push(t);
            v.extend(dir.iter().map(|u| s * u));
            nd.push(v);
            nw.push(tw * w);
        }
    }
    (nd, nw)
}

/// Gauss rule for `(1-t²)^a` on [-1, 1].
fn gegenbauer(order: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(order, a, a)
}

/// Gauss rule for `|t|^beta (1-t²)^a` on [-1, 1]: `2 * half` symmetric nodes
/// from the Jacobi rule in `s = t²`.
fn kinked_rule(half: usize, beta: f64, a: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_jacobi(half, a, (beta - 1.0) / 2.0);
    // s = (1+x)/2, ds = dx/2; the weight picks up 2^{-(a + (beta-1)/2)}.
    let scale = 0.5f64.powf(a + (beta - 1.0) / 2.0 + 1.0);
    let mut nodes = Vec::with_capacity(2 * half);
    let mut weights = Vec::with_capacity(2 * half);
    for (xi, wi) in x.iter().zip(&w) {
        let t = ((1.0 + xi) / 2.0).sqrt();
        // ∫_{-1}^{1} |t|^β (1-t²)^a g(t) dt = ∫_0^1 s^{(β-1)/2} (1-s)^a g_even(√s) ds.
        nodes.push(-t);
        nodes.push(t);
        weights.push(0.5 * scale * wi);
        weights.push(0.5 * scale * wi);
    }
    (nodes, weights)
}

impl PolarRule {
    pub fn new(dim: usize, order: usize) -> Self {
        assert!(dim >= 2);
        let order = order.max(1);
        let mut rule = circle(order);
        for d in 3..=dim {
            rule = lift(&rule, &gegenbauer(order, (d as f64 - 3.0) / 2.0));
        }
        Self { dim, dirs: rule.0, weights: rule.1 }
    }

    /// Rule for `∫ g(ω) |ω_axis|^beta dω`: the kink factor is carried by the
    /// weights and must not be included in the integrand.
    pub fn kinked(dim: usize, order: usize, axis: usize, beta: f64) -> Self {
        assert!(dim >= 3 && axis < dim && beta > 0.0);
        let order = order.max(1);
        let mut rule = circle(order);
        for d in 3..dim {
            rule = lift(&rule, &gegenbauer(order, (d as f64 - 3.0) / 2.0));
        }
        let (mut dirs, weights) = lift(&rule, &kinked_rule(order.div_ceil(2), beta, (dim as f64 - 3.0) / 2.0));
        for v in dirs.iter_mut() {
            v[..=axis].rotate_left(1);
        }
        Self { dim, dirs, weights }
    }

    /// Shared instance per `(dim, order)`, optionally kinked on `(axis, beta)`.
    pub fn cached(dim: usize, order: usize, kink: Option<(usize, f64)>) -> Arc<PolarRule> {
        type Key = (usize, usize, Option<(usize, u64)>);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<PolarRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let key = (dim, order, kink.map(|(k, b)| (k, b.to_bits())));
        let mut guard = cache.lock().expect("rule cache poisoned");
        guard
            .entry(key)
            .or_insert_with(|| {
                Arc::new(match kink {
                    None => PolarRule::new(dim, order),
                    Some((axis, beta)) => PolarRule::kinked(dim, order, axis, beta),
                })
            })
            .clone()
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Radial panel layout along each ray.
///
/// Past an inner radius the panels are equal in `ln r`, spanning from
/// `e^{-4}/scale` (or closer in for short rays) to the boundary, so the node
/// set moves smoothly with the ray length and the scale.
#[derive(Debug, Clone, Copy)]
pub struct RadialRule {
    /// Inverse concentration length.
    pub scale: f64,
    pub panels: usize,
    pub order: usize,
}

impl RadialRule {
    pub fn new(scale: f64, order: usize) -> Self {
        Self { scale, panels: 12, order }
    }

    fn edges(&self, len: f64, extra: &[f64]) -> Vec<f64> {
        let s_end = (self.scale * len).ln();
        let s_lo = (-4.0f64).min(s_end - 6.0);
        let h = (s_end - s_lo) / self.panels as f64;
        let mut edges = Vec::with_capacity(self.panels + extra.len() + 2);
        edges.push(0.0);
        for j in 0..self.panels {
            edges.push((s_lo + j as f64 * h).exp() / self.scale);
        }
        edges.extend(extra.iter().copied().filter(|&r| r > 0.0 && r < len));
        edges.push(len);
        edges.sort_by(|a, b| a.partial_cmp(b).expect("finite radii"));
        edges.dedup();
        edges
    }
}

/// `∫_Ω f` with a polar rule centered at `center`.
///
/// `breaks(dir)` returns radii along a ray where the integrand has a kink;
/// they become panel edges.
pub fn integrate_polar<R, F, B>(
    f: &mut F,
    region: &R,
    center: &[f64],
    rule: &PolarRule,
    radial: RadialRule,
    breaks: B,
) -> Result<f64>
where
    R: Region + ?Sized,
    F: FnMut(&[f64]) -> f64,
    B: Fn(&[f64]) -> Vec<f64>,
{
    let mut out = [0.0];
    integrate_polar_vec(
        &mut |x: &[f64], v: &mut [f64]| {
            v[0] = f(x);
            Ok(())
        },
        1,
        region,
        center,
        rule,
        radial,
        breaks,
        &mut out,
    )?;
    Ok(out[0])
}

/// Vector-valued form of [`integrate_polar`]: `f` writes `width` values per
/// sample and the integrals are added into `acc`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_polar_vec<R, F, B>(
    f: &mut F,
    width: usize,
    region: &R,
    center: &[f64],
    rule: &PolarRule,
    radial: RadialRule,
    breaks: B,
    acc: &mut [f64],
) -> Result<()>
where
    R: Region + ?Sized,
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    B: Fn(&[f64]) -> Vec<f64>,
{
    let n = region.dim();
    let (gx, gw) = gauss_legendre::<f64>(radial.order.max(2));
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; width];
    let mut ray = vec![0.0; width];
    for (dir, &wdir) in rule.dirs.iter().zip(&rule.weights) {
        let len = region.ray_exit(center, dir);
        let edges = radial.edges(len, &breaks(dir));
        ray.iter_mut().for_each(|r| *r = 0.0);
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            // First panel in r, the rest in ln r.
            let log = lo > 0.0;
            let (m, h) = if log { ((hi.ln() + lo.ln()) / 2.0, (hi.ln() - lo.ln()) / 2.0) } else { (hi / 2.0, hi / 2.0) };
            for (t, w) in gx.iter().zip(&gw) {
                let u = m + h * t;
                let (r, jac) = if log {
                    let r = u.exp();
                    (r, r)
                } else {
                    (u, 1.0)
                };
                for i in 0..n {
                    x[i] = center[i] + r * dir[i];
                }
                f(&x, &mut v)?;
                if v.iter().any(|v| !v.is_finite()) {
                    return Err(Error::SingularSample(x.clone()));
                }
                let scale = h * w * jac * r.powi(n as i32 - 1);
                for (a, b) in ray.iter_mut().zip(&v) {
                    *a += scale * b;
                }
            }
        }
        for (a, b) in acc.iter_mut().zip(&ray) {
            *a += wdir * b;
        }
    }
    Ok(())
}

/// `∫_Ω f` following `spec`. For the product scheme the rule is centered at
/// `singular` when given (the only point where `f` may blow up), otherwise
/// at the center of the region's bounding ball.
pub fn integrate_ball<R, F>(mut f: F, region: &R, spec: &QuadratureSpec, singular: Option<&[f64]>) -> Result<f64>
where
    R: Region + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    spec.validate()?;
    let (bc, br) = region.bounding_ball();
    match spec.scheme {
        Scheme::RadialProduct => {
            let center = singular.map(<[f64]>::to_vec).unwrap_or(bc);
            let rule = PolarRule::cached(region.dim(), spec.angular_order(), None);
            integrate_polar(&mut f, region, &center, &rule, RadialRule::new(1.0 / br, spec.radial_order()), |_| Vec::new())
        }
        Scheme::MonteCarlo => {
            let n = region.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let mut sum = 0.0;
            let mut x = vec![0.0; n];
            for _ in 0..spec.node_count {
                // Uniform in the bounding ball via Gaussian direction and r ~ U^{1/n}.
                let mut norm = 0.0;
                for xi in x.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *xi = g;
                    norm += g * g;
                }
                let r = br * rng.gen::<f64>().powf(1.0 / n as f64) / norm.sqrt();
                for i in 0..n {
                    x[i] = bc[i] + r * x[i];
                }
                if region.contains(&x) {
                    let v = f(&x);
                    if !v.is_finite() {
                        return Err(Error::SingularSample(x.clone()));
                    }
                    sum += v;
                }
            }
            let vol = sphere_area::<f64>(n) * br.powi(n as i32) / n as f64;
            Ok(vol * sum / spec.node_count as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;

    struct Ball(usize);

    impl Region for Ball {
        fn dim(&self) -> usize {
            self.0
        }
        fn contains(&self, x: &[f64]) -> bool {
            x.iter().map(|v| v * v).sum::<f64>() < 1.0
        }
        fn ray_exit(&self, o: &[f64], d: &[f64]) -> f64 {
            let od: f64 = o.iter().zip(d).map(|(a, b)| a * b).sum();
            let oo: f64 = o.iter().map(|v| v * v).sum();
            -od + (od * od + 1.0 - oo).sqrt()
        }
        fn bounding_ball(&self) -> (Vec<f64>, f64) {
            (vec![0.0; self.0], 1.0)
        }
    }

    fn volume(n: usize) -> f64 {
        std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
    }

    #[test]
    fn rule_weights_sum_to_area() {
        for n in 2..=7 {
            let r = PolarRule::new(n, 3);
            let s: f64 = r.weights.iter().sum();
            assert!((s / sphere_area::<f64>(n) - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn kinked_rule_integrates_axis_moment() {
        let (n, beta) = (6usize, 1.5);
        // ∫_{S^{n-1}} |ω_k|^β ω_k² = ω_{n-2} ∫ |t|^{β+2} (1-t²)^{(n-3)/2} dt
        let exact = 2.0 * std::f64::consts::PI.powf((n as f64 - 1.0) / 2.0) * gamma((beta + 3.0) / 2.0)
            / gamma((n as f64 + beta + 2.0) / 2.0);
        for axis in 0..n {
            let r = PolarRule::kinked(n, 4, axis, beta);
            let q: f64 = r.dirs.iter().zip(&r.weights).map(|(d, w)| w * d[axis] * d[axis]).sum();
            assert!((q / exact - 1.0).abs() < 1e-13, "axis {axis}");
            let odd: f64 = r.dirs.iter().zip(&r.weights).map(|(d, w)| w * d[axis] * d[(axis + 1) % n]).sum();
            assert!(odd.abs() < 1e-14);
        }
    }

    #[test]
    fn smooth_spherical_integral() {
        // ∫ e^{c·ω} over S^5 = (2π)^3 I_2(|c|)/|c|^2; I_2 by its power series.
        let c = [0.7, 0.0, 0.3, 0.0, 0.0, 0.5];
        let k: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let i2: f64 = (0..30).map(|m| (k / 2.0).powi(2 * m + 2) / (gamma(m as f64 + 1.0) * gamma(m as f64 + 3.0))).sum();
        let exact = (2.0 * std::f64::consts::PI).powi(3) * i2 / (k * k);
        let r = PolarRule::new(6, 6);
        let q: f64 = r.dirs.iter().zip(&r.weights).map(|(d, w)| w * d.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>().exp()).sum();
        assert!((q / exact - 1.0).abs() < 1e-13);
    }

    #[test]
    fn unit_volume_n5() {
        let v = integrate_ball(|_| 1.0, &Ball(5), &QuadratureSpec::default(), None).unwrap();
        assert!((v / volume(5) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn odd_function_vanishes() {
        let v = integrate_ball(|x| x[0] * (1.0 + x[1] * x[1]), &Ball(5), &QuadratureSpec::default(), None).unwrap();
        assert!(v.abs() < 1e-13);
    }

    #[test]
    fn second_moment_n6() {
        let n = 6;
        let v = integrate_ball(|x| x.iter().map(|t| t * t).sum(), &Ball(n), &QuadratureSpec::default(), None).unwrap();
        let expect = n as f64 * volume(n) / (n as f64 + 2.0);
        assert!((v / expect - 1.0).abs() < 1e-10);
    }

    #[test]
    fn off_center_rule_still_integrates_constants() {
        let c = [0.3, -0.2, 0.1, 0.0, 0.2];
        let rule = PolarRule::new(5, 6);
        let v = integrate_polar(&mut |_| 1.0, &Ball(5), &c, &rule, RadialRule::new(1.0, 8), |_| vec![]).unwrap();
        assert!((v / volume(5) - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn singular_sample_is_reported() {
        let spec = QuadratureSpec { scheme: Scheme::MonteCarlo, node_count: 100, ..QuadratureSpec::default() };
        let r = integrate_ball(|_| f64::INFINITY, &Ball(5), &spec, None);
        assert!(matches!(r, Err(Error::SingularSample(_))));
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let spec = QuadratureSpec { scheme: Scheme::MonteCarlo, node_count: 20_000, seed: 7, ..QuadratureSpec::default() };
        let a = integrate_ball(|_| 1.0, &Ball(5), &spec, None).unwrap();
        let b = integrate_ball(|_| 1.0, &Ball(5), &spec, None).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!((a / volume(5) - 1.0).abs() < 0.05);
    }
}
