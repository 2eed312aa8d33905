//! The Navier Green's function `G(x,y) = |x-y|^{4-n} - H(x,y)`.
//!
//! On the unit ball the regular part has a closed form. Writing
//! `D = 1 - 2x·y + |x|²|y|²` (so `D = |x-y|²` when either point is on the
//! sphere),
//!
//! ```text
//! H(x,y) = D^{(4-n)/2}
//!        + (n-4)/2 · (1-|x|²)(1-|y|²) · ∫₀¹ 2s^{n-1} (1 - 2s²x·y + s⁴|x|²|y|²)^{(2-n)/2} ds.
//! ```
//!
//! The first term is the Kelvin image of the singular part, which takes
//! care of `G = 0`; the second is biharmonic, vanishes on the sphere, and
//! corrects the Laplacian so that `ΔG = 0` there as well.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::model::{Backend, DomainModel};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_interval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenEval {
    pub g: f64,
    pub h: f64,
    /// ∇ₓH(x, y).
    pub grad_h: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gl20() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre::<f64>(20);
        (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
    })
}

/// `∫₀¹ 2 s^{n-1+2j} E(s)^{-e} ds` with `E = 1 - 2s²c + s⁴q`, for the
/// requested `(j, e)` pairs.
fn moments<const K: usize>(n: usize, c: f64, q: f64, req: [(i32, f64); K]) -> [f64; K] {
    let integrand = |s: f64, j: i32, e: f64| {
        let s2 = s * s;
        let big_e = 1.0 - 2.0 * s2 * c + s2 * s2 * q;
        2.0 * s.powi(n as i32 - 1 + 2 * j) * big_e.powf(-e)
    };
    let mut out = [0.0; K];
    if q.sqrt() <= 0.7 {
        let (x, w) = gl20();
        for (s, w) in x.iter().zip(w) {
            for (k, &(j, e)) in req.iter().enumerate() {
                out[k] += w * integrand(*s, j, e);
            }
        }
    } else {
        for (k, &(j, e)) in req.iter().enumerate() {
            out[k] = integrate_interval(|s: f64| integrand(s, j, e), 0.0, 1.0, 1e-13, 1e-15, 8)
                .expect("smooth integrand on [0,1] for interior points");
        }
    }
    out
}

/// Closed-form regular part on the unit ball.
pub fn ball_regular_part(n: usize, x: &[f64], y: &[f64]) -> f64 {
    let nf = n as f64;
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));
    let d = 1.0 - 2.0 * xy + xx * yy;
    let [i0] = moments(n, xy, xx * yy, [(0, (nf - 2.0) / 2.0)]);
    d.powf((4.0 - nf) / 2.0) + 0.5 * (nf - 4.0) * (1.0 - xx) * (1.0 - yy) * i0
}

/// Closed-form `H(x,y)` and `∇ₓH(x,y)` on the unit ball.
pub fn ball_regular_part_grad(n: usize, x: &[f64], y: &[f64]) -> (f64, Vec<f64>) {
    let nf = n as f64;
    let (xx, yy, xy) = (dot(x, x), dot(y, y), dot(x, y));
    let d = 1.0 - 2.0 * xy + xx * yy;
    let [i0, ia, ib] = moments(n, xy, xx * yy, [(0, (nf - 2.0) / 2.0), (1, nf / 2.0), (2, nf / 2.0)]);
    let kappa = 0.5 * (nf - 4.0);
    let (p, q) = (1.0 - xx, 1.0 - yy);
    let h = d.powf((4.0 - nf) / 2.0) + kappa * p * q * i0;
    let dpow = 0.5 * (4.0 - nf) * d.powf((2.0 - nf) / 2.0);
    let grad = (0..n)
        .map(|k| {
            let dd = -2.0 * y[k] + 2.0 * yy * x[k];
            let di = (nf - 2.0) * (ia * y[k] - yy * ib * x[k]);
            dpow * dd + kappa * q * (-2.0 * x[k] * i0 + p * di)
        })
        .collect();
    (h, grad)
}

fn collocation_h(domain: &DomainModel, x: &[f64], y: &[f64], grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
    let solver = domain.collocation()?;
    let n = domain.n() as f64;
    // H(·, y) is biharmonic in the first slot with the singular part's
    // boundary data; solving in the first slot gives ∇ₓ directly.
    let sol = solver.solve(
        |b| dot_diff(b, y).powf((4.0 - n) / 2.0),
        |b| -2.0 * (n - 4.0) * dot_diff(b, y).powf((2.0 - n) / 2.0),
    );
    Ok((sol.value(x), grad.then(|| sol.gradient(x))))
}

fn dot_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// H(x, y) for interior points.
pub fn regular_part(domain: &DomainModel, x: &[f64], y: &[f64]) -> Result<f64> {
    domain.check_interior(x)?;
    domain.check_interior(y)?;
    match domain.backend() {
        Backend::UnitBall => Ok(ball_regular_part(domain.n(), x, y)),
        Backend::GenericCollocation => Ok(collocation_h(domain, x, y, false)?.0),
    }
}

/// H(x, y) and ∇ₓH(x, y).
pub fn regular_part_grad(domain: &DomainModel, x: &[f64], y: &[f64]) -> Result<(f64, Vec<f64>)> {
    domain.check_interior(x)?;
    domain.check_interior(y)?;
    match domain.backend() {
        Backend::UnitBall => Ok(ball_regular_part_grad(domain.n(), x, y)),
        Backend::GenericCollocation => {
            let (h, g) = collocation_h(domain, x, y, true)?;
            Ok((h, g.expect("gradient requested")))
        }
    }
}

pub fn green(domain: &DomainModel, x: &[f64], y: &[f64]) -> Result<GreenEval> {
    let r2 = dot_diff(x, y);
    if r2 == 0.0 {
        return Err(Error::Singularity);
    }
    let (h, grad_h) = regular_part_grad(domain, x, y)?;
    let g = r2.powf((4.0 - domain.n() as f64) / 2.0) - h;
    Ok(GreenEval { g, h, grad_h })
}

/// Largest boundary mismatch `|H(·,y) - |·-y|^{4-n}|` of the collocation
/// solution over fresh boundary points, relative to the data's size.
pub fn collocation_residual(domain: &DomainModel, y: &[f64], checks: usize) -> Result<f64> {
    domain.check_interior(y)?;
    let solver = domain.collocation()?;
    let n = domain.n() as f64;
    let sol = solver.solve(
        |b| dot_diff(b, y).powf((4.0 - n) / 2.0),
        |b| -2.0 * (n - 4.0) * dot_diff(b, y).powf((2.0 - n) / 2.0),
    );
    let mut worst = 0.0f64;
    for (b, _) in domain.boundary_samples(checks, domain.seed().wrapping_add(0x00c4_ec4b)) {
        let target = dot_diff(&b, y).powf((4.0 - n) / 2.0);
        worst = worst.max((sol.value(&b) - target).abs() / target.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::directional_fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-rmax..rmax)).collect();
            if dot(&x, &x) < rmax * rmax {
                return x;
            }
        }
    }

    #[test]
    fn center_value() {
        for n in 5..=8 {
            let h = ball_regular_part(n, &vec![0.0; n], &vec![0.0; n]);
            assert!((h - (1.0 + (n as f64 - 4.0) / n as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DomainModel::unit_ball(6).unwrap();
        for _ in 0..50 {
            let x = random_point(&mut rng, 6, 0.95);
            let y = random_point(&mut rng, 6, 0.95);
            let a = regular_part(&d, &x, &y).unwrap();
            let b = regular_part(&d, &y, &x).unwrap();
            assert!((a - b).abs() <= 1e-8 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn vanishes_toward_the_boundary() {
        let d = DomainModel::unit_ball(5).unwrap();
        let x = [0.2, -0.1, 0.3, 0.0, 0.1];
        let u = [0.0, 0.6, 0.0, 0.8, 0.0];
        let vals: Vec<f64> = [0.9, 0.99, 0.999, 0.9999]
            .iter()
            .map(|r| green(&d, &x, &u.map(|v| v * r)).unwrap().g)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals[3].abs() < 1e-3);
    }

    #[test]
    fn positive_on_interior_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = DomainModel::unit_ball(7).unwrap();
        for _ in 0..200 {
            let x = random_point(&mut rng, 7, 0.98);
            let y = random_point(&mut rng, 7, 0.98);
            assert!(green(&d, &x, &y).unwrap().g > 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let n = 6;
        let x = [0.3, 0.1, -0.2, 0.0, 0.2, 0.1];
        let y = [-0.1, 0.4, 0.1, 0.2, 0.0, -0.3];
        let (_, g) = ball_regular_part_grad(n, &x, &y);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let fd = directional_fd(|z: &[f64]| ball_regular_part(n, z, &y), &x, &e, &[1e-2, 5e-3]);
            assert!((fd - g[k]).abs() < 1e-8, "axis {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn laplacian_vanishes_on_the_sphere() {
        let n = 5;
        let x = [0.1, 0.2, 0.0, -0.2, 0.1];
        let g = |y: &[f64]| dot_diff(&x, y).powf((4.0 - n as f64) / 2.0) - ball_regular_part(n, &x, y);
        let y = [0.0, 0.0, 0.6 * 0.999, 0.8 * 0.999, 0.0];
        let h = 1e-4;
        let mut lap = 0.0;
        for k in 0..n {
            let mut p = y;
            let mut m = y;
            p[k] += h;
            m[k] -= h;
            lap += (g(&p) - 2.0 * g(&y) + g(&m)) / (h * h);
        }
        assert!(lap.abs() < 2e-2, "{lap}");
    }

    #[test]
    fn singular_part_is_exact() {
        let d = DomainModel::unit_ball(5).unwrap();
        let x = [0.1, 0.0, 0.0, 0.0, 0.0];
        let y = [0.0, 0.3, 0.0, 0.0, 0.1];
        let e = green(&d, &x, &y).unwrap();
        assert_eq!(e.g + e.h, dot_diff(&x, &y).powf(-0.5));
        assert!(matches!(green(&d, &x, &x), Err(Error::Singularity)));
        assert!(matches!(regular_part(&d, &[1.0, 0.0, 0.0, 0.0, 0.0], &y), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn collocation_reproduces_the_ball() {
        let ball = DomainModel::unit_ball(5).unwrap();
        let coll = DomainModel::ellipsoid(5, vec![0.0; 5], vec![1.0; 5], 1, 300, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let x = random_point(&mut rng, 5, 0.3);
            let y = random_point(&mut rng, 5, 0.3);
            let a = regular_part(&ball, &x, &y).unwrap();
            let b = regular_part(&coll, &x, &y).unwrap();
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
        assert!(collocation_residual(&coll, &[0.1, 0.0, 0.0, 0.0, 0.0], 100).unwrap() < 1e-2);
    }
}
