//! One-dimensional rules: Gauss-Legendre, adaptive Gauss-Kronrod, and the
//! radial integral over the whole space.

use serde::{Deserialize, Serialize};

use statrs::function::gamma::ln_gamma;

use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    RadialProduct,
    MonteCarlo,
}

/// Quadrature controls shared by every integral in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub node_count: usize,
    #[serde(default)]
    pub seed: u64,
    pub target_rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { scheme: Scheme::RadialProduct, node_count: 12, seed: 0, target_rel_tol: 1e-11 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < 8 {
            return Err(Error::Config(format!("node-count must be >= 8, got {}", self.node_count)));
        }
        if !(self.target_rel_tol > 0.0) {
            return Err(Error::Config("target-rel-tol must be positive".into()));
        }
        Ok(())
    }

    /// Gauss order per polar angle of the spherical product rule.
    pub fn angular_order(&self) -> usize {
        (self.node_count / 4).max(2)
    }

    /// Gauss order per radial panel.
    pub fn radial_order(&self) -> usize {
        (2 * self.node_count / 3).max(4)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.target_rel_tol = tol;
        self
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    let half = (m + 1) / 2;
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p1 = x;
                p0 = 1.0;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes.into_iter().map(T::lit).collect(), weights.into_iter().map(T::lit).collect())
}

/// Gauss–Jacobi rule on [-1, 1] for the weight `(1-x)^alpha (1+x)^beta`,
/// by Golub–Welsch.
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1 && alpha > -1.0 && beta > -1.0);
    let ab = alpha + beta;
    let mut jac = nalgebra::DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let diag = if k == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
        };
        jac[(k, k)] = diag;
        if k + 1 < m {
            let j = kf + 1.0;
            let t = 2.0 * j + ab;
            let b2 = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / (t * t * (t + 1.0))
            } else {
                4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (t * t * (t + 1.0) * (t - 1.0))
            };
            jac[(k, k + 1)] = b2.sqrt();
            jac[(k + 1, k)] = b2.sqrt();
        }
    }
    let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0) - ln_gamma(ab + 2.0);
    let mu0 = ln_mu0.exp();
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> =
        (0..m).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
    pairs.into_iter().unzip()
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Result<(T, T)> {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let fc = f(c);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        kron = kron + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let (val, err) = (kron * h, ((kron - gauss) * h).abs());
    if !val.is_finite() {
        return Err(Error::DivergentIntegral(format!(
            "non-finite integrand on [{:?}, {:?}]",
            a, b
        )));
    }
    Ok((val, err))
}

/// Globally adaptive Gauss-Kronrod (7/15) on a finite interval, starting
/// from `initial` equal panels.
pub fn integrate_interval<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    rel_tol: T,
    abs_tol: T,
    initial: usize,
) -> Result<T> {
    const MAX_SEGMENTS: usize = 4000;
    let initial = initial.max(1);
    let step = (b - a) / T::from_usize_lossy(initial);
    let mut segs: Vec<(T, T, T, T)> = Vec::with_capacity(initial * 4);
    for i in 0..initial {
        let lo = a + step * T::from_usize_lossy(i);
        let hi = if i + 1 == initial { b } else { lo + step };
        let (v, e) = gk15(&f, lo, hi)?;
        segs.push((lo, hi, v, e));
    }
    loop {
        let total = segs.iter().fold(T::zero(), |s, x| s + x.2);
        let err = segs.iter().fold(T::zero(), |s, x| s + x.3);
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if segs.len() >= MAX_SEGMENTS {
            return Err(Error::DivergentIntegral(format!(
                "adaptive refinement exhausted: value {:?}, error estimate {:?}",
                total, err
            )));
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, s)| if s.3 > acc.1 { (i, s.3) } else { acc });
        let (lo, hi, _, _) = segs.swap_remove(worst);
        let mid = (lo + hi) * T::lit(0.5);
        if !(mid > lo && mid < hi) {
            return Err(Error::DivergentIntegral("interval collapsed below resolution".into()));
        }
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
}

/// Integral of `f` over `[a, inf)` via `x = a + t / (1 - t)`.
pub fn integrate_half_line<T: Real, F: Fn(T) -> T>(f: F, a: T, rel_tol: T, abs_tol: T, initial: usize) -> Result<T> {
    let one = T::one();
    integrate_interval(
        |t: T| {
            if t >= one {
                return T::zero();
            }
            let s = one - t;
            f(a + t / s) / (s * s)
        },
        T::zero(),
        one,
        rel_tol,
        abs_tol,
        initial,
    )
}

/// Surface area of the unit sphere in `R^n` (the sphere has dimension n - 1).
pub fn sphere_area<T: Real>(n: usize) -> T {
    assert!(n >= 1);
    let two_pi = T::lit(2.0) * T::PI();
    let (mut area, mut k) = if n % 2 == 1 { (T::lit(2.0), 1) } else { (two_pi, 2) };
    while k < n {
        k += 2;
        area = area * two_pi / T::from_usize_lossy(k - 2);
    }
    area
}

/// `area(S^{n-1}) * int_0^inf f(r) r^{n-1} dr`: the integral over `R^n` of
/// a radial function.
pub fn integrate_radial<T: Real, F: Fn(T) -> T>(f: F, n: usize, spec: &QuadratureSpec) -> Result<T> {
    spec.validate()?;
    let tol = T::lit(spec.target_rel_tol * 0.05);
    let initial = (spec.node_count / 4).max(2);
    let nm1 = (n - 1) as i32;
    let radial = integrate_half_line(|r: T| f(r) * r.powi(nm1), T::zero(), tol, T::zero(), initial)?;
    Ok(sphere_area::<T>(n) * radial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_jacobi_matches_legendre_and_beta_moments() {
        let (x, w) = gauss_jacobi(7, 0.0, 0.0);
        let (xl, wl) = gauss_legendre::<f64>(7);
        for i in 0..7 {
            assert_relative_eq!(x[i], xl[i], epsilon = 1e-13);
            assert_relative_eq!(w[i], wl[i], epsilon = 1e-13);
        }
        // ∫(1-x)^a(1+x)^b x² through Beta functions in s = (1+x)/2.
        let (a, b) = (0.5, -0.25);
        let (x, w) = gauss_jacobi(4, a, b);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        let bf = |p: f64| statrs::function::beta::beta(p, a + 1.0);
        let reference = 2f64.powf(a + b + 1.0) * (4.0 * bf(b + 3.0) - 4.0 * bf(b + 2.0) + bf(b + 1.0));
        assert_relative_eq!(q, reference, max_relative = 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_relative_eq!(s, 2.0 / 11.0, epsilon = 1e-14);
        let (x, w) = gauss_legendre::<f64>(7);
        assert_eq!(x[3], 0.0);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area::<f64>(2), 2.0 * std::f64::consts::PI);
        assert_relative_eq!(sphere_area::<f64>(3), 4.0 * std::f64::consts::PI);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(sphere_area::<f64>(5), 8.0 * pi * pi / 3.0, epsilon = 1e-14);
        assert_relative_eq!(sphere_area::<f64>(6), pi.powi(3), epsilon = 1e-14);
    }

    #[test]
    fn zero_integrand_is_zero() {
        let v = integrate_radial(|_r: f64| 0.0, 5, &QuadratureSpec::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn divergent_radial_integral_is_reported() {
        let r = integrate_radial(|r: f64| (1.0 + r * r).powf(-2.0), 5, &QuadratureSpec::default());
        assert!(matches!(r, Err(Error::DivergentIntegral(_))));
    }

    #[test]
    fn spec_validation() {
        let mut s = QuadratureSpec::default();
        s.node_count = 4;
        assert!(s.validate().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate_interval(|x: f32| x * x, 0.0, 1.0, 1e-6, 0.0, 1).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-6);
    }
}
