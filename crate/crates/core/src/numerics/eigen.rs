//! Cyclic Jacobi rotations for the small symmetric matrices built from
//! critical-point tuples.

use super::Real;
use crate::error::{Error, Result};

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    /// Builds from rows; rejects ragged input and asymmetry above `1e-12`
    /// (relative to the largest entry when that exceeds one).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::InvalidMatrix(format!("row of length {} in {dim}x{dim} matrix", row.len())));
            }
            data.extend_from_slice(row);
        }
        let m = Self { dim, data };
        m.check_symmetric()?;
        Ok(m)
    }

    fn check_symmetric(&self) -> Result<()> {
        let scale = self.data.iter().fold(T::one(), |s, v| s.max(v.abs()));
        let tol = T::lit(1e-12) * scale;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if !(d <= tol) {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ by {d:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn shifted(&self, t: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.data[i * self.dim + i] = m.data[i * self.dim + i] + t;
        }
        m
    }

    /// Principal submatrix on the given indices, in order.
    pub fn principal(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * idx.len() + b] = self.get(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }
}

/// All eigenvalues, ascending.
pub fn symmetric_eigenvalues<T: Real>(m: &SymMatrix<T>) -> Result<Vec<T>> {
    m.check_symmetric()?;
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let n = m.dim;
    let mut a = m.data.clone();
    let at = |a: &Vec<T>, i: usize, j: usize| a[i * n + j];
    let frob = a.iter().fold(T::zero(), |s, v| s + *v * *v).sqrt();
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off + at(&a, i, j) * at(&a, i, j);
            }
        }
        if off.sqrt() <= eps * frob || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = at(&a, p, q);
                if apq == T::zero() {
                    continue;
                }
                let app = at(&a, p, p);
                let aqq = at(&a, q, q);
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = at(&a, k, p);
                    let akq = at(&a, k, q);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = at(&a, p, k);
                    let aqk = at(&a, q, k);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(eig)
}

/// Least eigenvalue of a symmetric matrix.
pub fn min_eigenvalue_sym<T: Real>(m: &SymMatrix<T>) -> Result<T> {
    if m.dim == 0 {
        return Err(Error::InvalidMatrix("empty matrix".into()));
    }
    Ok(symmetric_eigenvalues(m)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_unit_spectrum() {
        assert_eq!(min_eigenvalue_sym(&SymMatrix::<f64>::identity(3)).unwrap(), 1.0);
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b, c) = (0.3, -1.7, 0.9);
        let m = SymMatrix::from_rows(&[vec![a, c], vec![c, b]]).unwrap();
        let expect = (a + b) / 2.0 - (((a - b) / 2.0f64).powi(2) + c * c).sqrt();
        assert_relative_eq!(min_eigenvalue_sym(&m).unwrap(), expect, epsilon = 1e-14);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let r = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0 + 1e-9, 1.0]]);
        assert!(matches!(r, Err(Error::InvalidMatrix(_))));
    }

    #[test]
    fn single_precision() {
        let m = SymMatrix::from_rows(&[vec![2.0f32, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!((min_eigenvalue_sym(&m).unwrap() - 1.0).abs() < 1e-6);
    }
}
