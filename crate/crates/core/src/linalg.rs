//! Spectral functionals of small dense square matrices.
//!
//! Everything here targets the (m+1)x(m+1) Jacobians of heat maps with
//! m <= 8, so the implementation favours accuracy and determinism over
//! asymptotic speed: cyclic Jacobi sweeps on A^T A for the singular values,
//! partial-pivot elimination for determinants and inverses.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Determinants at or below this magnitude are treated as singular.
pub const SINGULAR_DET_THRESHOLD: f64 = 1e-14;

/// Dense square matrix, row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CoreError::NotSquare);
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// A^T A; symmetric positive semi-definite.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        let mut g = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self[(k, i)] * self[(k, j)];
                }
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        (0..self.n)
            .map(|j| self[(i, j)] * self[(i, j)])
            .sum::<f64>()
            .sqrt()
    }

    /// Determinant by LU factorization with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[col * n + col].abs();
            for row in col + 1..n {
                let v = a[row * n + col].abs();
                if v > best {
                    best = v;
                    pivot = row;
                }
            }
            if best == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                det = -det;
            }
            let d = a[col * n + col];
            det *= d;
            for row in col + 1..n {
                let f = a[row * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[row * n + j] -= f * a[col * n + j];
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Singular-value functionals of a square matrix: lambda (smallest singular
/// value), Lambda (largest), determinant, Frobenius and operator norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub det: f64,
    pub frobenius: f64,
    pub operator_norm: f64,
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Dimension is at most 9 here, so plain sweeps converge in a handful of
/// passes; the off-diagonal mass is driven below 1e-15 of the Frobenius norm.
fn jacobi_eigenvalues(mut b: Matrix) -> Vec<f64> {
    let n = b.n();
    if n == 1 {
        return vec![b[(0, 0)]];
    }
    let scale = b.frobenius().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += b[(p, q)] * b[(p, q)];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = b[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (b[(q, q)] - b[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let bkp = b[(k, p)];
                    let bkq = b[(k, q)];
                    b[(k, p)] = c * bkp - s * bkq;
                    b[(k, q)] = s * bkp + c * bkq;
                }
                for k in 0..n {
                    let bpk = b[(p, k)];
                    let bqk = b[(q, k)];
                    b[(p, k)] = c * bpk - s * bqk;
                    b[(q, k)] = s * bpk + c * bqk;
                }
            }
        }
    }
    (0..n).map(|i| b[(i, i)]).collect()
}

/// Compute the spectral summary of `a`: singular values via Jacobi on A^T A,
/// determinant via LU, Frobenius norm directly.
pub fn spectral_summary(a: &Matrix) -> SpectralSummary {
    let eigs = jacobi_eigenvalues(a.gram());
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for e in eigs {
        let e = e.max(0.0);
        if e < lo {
            lo = e;
        }
        if e > hi {
            hi = e;
        }
    }
    let lambda_min = lo.sqrt();
    let lambda_max = hi.sqrt();
    SpectralSummary {
        lambda_min,
        lambda_max,
        det: a.det(),
        frobenius: a.frobenius(),
        operator_norm: lambda_max,
    }
}

/// Invert `a` by Gauss-Jordan elimination with partial pivoting.
///
/// Matrices with |det| <= 1e-14 are rejected; the error carries the computed
/// smallest singular value so callers can report how close to singular the
/// Jacobian was.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    let n = a.n();
    if a.det().abs() <= SINGULAR_DET_THRESHOLD {
        let summary = spectral_summary(a);
        return Err(CoreError::NearSingular {
            lambda_min: summary.lambda_min,
        });
    }
    let mut work = a.clone();
    let mut inv = Matrix::identity(n);
    for col in 0..n {
        let mut pivot = col;
        let mut best = work[(col, col)].abs();
        for row in col + 1..n {
            let v = work[(row, col)].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            let summary = spectral_summary(a);
            return Err(CoreError::NearSingular {
                lambda_min: summary.lambda_min,
            });
        }
        if pivot != col {
            for j in 0..n {
                let tmp = work[(col, j)];
                work[(col, j)] = work[(pivot, j)];
                work[(pivot, j)] = tmp;
                let tmp = inv[(col, j)];
                inv[(col, j)] = inv[(pivot, j)];
                inv[(pivot, j)] = tmp;
            }
        }
        let d = work[(col, col)];
        for j in 0..n {
            work[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = work[(row, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..n {
                work[(row, j)] -= f * work[(col, j)];
                inv[(row, j)] -= f * inv[(col, j)];
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_summary() {
        let s = spectral_summary(&Matrix::identity(2));
        assert_eq!(s.lambda_min, 1.0);
        assert_eq!(s.lambda_max, 1.0);
        assert_eq!(s.det, 1.0);
        assert!((s.frobenius - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.operator_norm, s.lambda_max);
    }

    #[test]
    fn diagonal_summary() {
        let s = spectral_summary(&Matrix::diagonal(&[2.0, 0.5]));
        assert!((s.lambda_min - 0.5).abs() < 1e-14);
        assert!((s.lambda_max - 2.0).abs() < 1e-14);
        assert!((s.det - 1.0).abs() < 1e-14);
    }

    #[test]
    fn invert_diagonal() {
        let inv = invert(&Matrix::diagonal(&[2.0, 0.5])).unwrap();
        assert!((inv[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((inv[(1, 1)] - 2.0).abs() < 1e-14);
        assert_eq!(inv[(0, 1)], 0.0);
    }

    #[test]
    fn invert_identity() {
        let inv = invert(&Matrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(inv[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn near_singular_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-16]]).unwrap();
        match invert(&a) {
            Err(CoreError::NearSingular { lambda_min }) => assert!(lambda_min < 1e-10),
            other => panic!("expected NearSingular, got {other:?}"),
        }
    }

    #[test]
    fn inverse_operator_norm_is_reciprocal_lambda() {
        // |A^{-1}| = 1/lambda(A) on a well-conditioned 3x3.
        let a = Matrix::from_rows(&[
            vec![2.0, 0.3, -0.1],
            vec![0.2, 1.5, 0.4],
            vec![-0.3, 0.1, 1.2],
        ])
        .unwrap();
        let s = spectral_summary(&a);
        let inv = invert(&a).unwrap();
        let si = spectral_summary(&inv);
        assert!((si.operator_norm * s.lambda_min - 1.0).abs() < 1e-10);
        // A * A^{-1} = I entrywise.
        let prod = a.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - want).abs() < 1e-10);
            }
        }
    }
}
