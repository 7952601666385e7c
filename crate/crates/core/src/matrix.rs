//! Dense row-major matrices and the handful of linear-algebra kernels the
//! solver needs: products, Frobenius norm, and power iteration for the top
//! eigenpair of a symmetric matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for power iteration.
pub const POWER_TOL: f64 = 1e-10;
/// Default iteration cap for power iteration.
pub const POWER_MAX_ITER: usize = 1000;

/// Row-major dense matrix of `f64`.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting a length mismatch or any
    /// non-finite entry.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        let m = Self { rows, cols, data };
        m.check_finite()?;
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.concat())
    }

    /// Builds an `m x k` matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::InvalidArgument("columns of unequal length".into()));
        }
        let mut out = Self::zeros(m, k);
        for (j, col) in columns.iter().enumerate() {
            out.set_col(j, col);
        }
        out.check_finite()?;
        Ok(out)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self.set(i, j, v);
        }
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    /// Locates the first NaN or infinity, if any.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::NonFinite {
                row: k / self.cols,
                col: k % self.cols,
            }),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
                context: "subtraction",
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
                context: "matmul",
            });
        }
        let (m, k, n) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        for i in 0..m {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[p * n..(p + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ * other` without materializing the transpose.
    pub fn tr_matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                left: self.shape(),
                right: other.shape(),
                context: "transposed matmul",
            });
        }
        let (k, m, n) = (self.rows, self.cols, other.cols);
        let mut out = Matrix::zeros(m, n);
        for p in 0..k {
            let a_row = &self.data[p * m..(p + 1) * m];
            let b_row = &other.data[p * n..(p + 1) * n];
            for (i, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * n..(i + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.matmul(b)
}

pub fn frobenius_norm(a: &Matrix) -> f64 {
    norm2(a.as_slice())
}

/// Top eigenvalue estimate from power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Leading eigenpair from power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric positive-semidefinite matrix (the
/// intended input is a Gram matrix `WᵀW`), by power iteration.
///
/// A zero matrix yields `0.0`. When `max_iter` is exhausted the current
/// estimate is returned with `converged == false`.
pub fn spectral_norm(a: &Matrix, tol: f64, max_iter: usize) -> Result<SpectralEstimate> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            left: a.shape(),
            right: (a.cols(), a.rows()),
            context: "spectral norm of non-square matrix",
        });
    }
    let n = a.rows();
    if a.max_abs() == 0.0 {
        return Ok(SpectralEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    // all-ones plus a small deterministic tilt so the start is never
    // orthogonal to the top eigenvector by symmetry
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 1e-3 * (i as f64 + 1.0) / n as f64)
        .collect();
    normalize(&mut v);
    let mut value = 0.0;
    for it in 1..=max_iter {
        let mut w = a.mat_vec(&v);
        let nrm = norm2(&w);
        if nrm == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        w.iter_mut().for_each(|x| *x /= nrm);
        let prev = value;
        value = nrm;
        v = w;
        if (value - prev).abs() <= tol * value {
            return Ok(SpectralEstimate {
                value,
                converged: true,
                iterations: it,
            });
        }
    }
    log::warn!("spectral_norm: power iteration did not converge in {max_iter} iterations");
    Ok(SpectralEstimate {
        value,
        converged: false,
        iterations: max_iter,
    })
}

/// Leading eigenpair of a symmetric matrix by power iteration from the
/// normalized all-ones vector. The returned vector has unit norm and its
/// entry of largest magnitude is nonnegative.
///
/// Convergence is declared when the residual `‖Av − λv‖` falls below
/// `tol · |λ|`, so a matrix whose leading eigenspace contains the start
/// vector (e.g. the identity) returns the start vector itself.
pub fn leading_eigvec(a: &Matrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch {
            left: a.shape(),
            right: (a.cols(), a.rows()),
            context: "eigenvector of non-square matrix",
        });
    }
    if !a.is_symmetric(1e-10) {
        return Err(Error::InvalidArgument(
            "leading_eigvec requires a symmetric matrix".into(),
        ));
    }
    let n = a.rows();
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut value = 0.0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let w = a.mat_vec(&v);
        value = dot(&v, &w);
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - value * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * value.abs() || norm2(&w) == 0.0 {
            converged = true;
            break;
        }
        v = w;
        normalize(&mut v);
    }
    if !converged {
        log::warn!("leading_eigvec: power iteration did not converge in {max_iter} iterations");
    }
    let pivot = v
        .iter()
        .copied()
        .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(EigenPair {
        value,
        vector: v,
        converged,
        iterations,
    })
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.random::<f64>() - 0.3).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    /// Cyclic Jacobi eigenvalue sweep for symmetric matrices; test oracle only.
    fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
        let n = a.rows();
        let mut a = a.clone();
        let mut v = Matrix::identity(n);
        for _ in 0..100 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a.get(i, j).powi(2))
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                    for k in 0..n {
                        let vkp = v.get(k, p);
                        let vkq = v.get(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
        ((0..n).map(|i| a.get(i, i)).collect(), v)
    }

    #[test]
    fn identity_times_matrix_is_matrix() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(Matrix::identity(3).matmul(&a).unwrap(), a);
    }

    #[test]
    fn orthogonal_supports_multiply_to_zero() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(a.matmul(&b).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random(4, 3, &mut rng);
        let b = random(3, 5, &mut rng);
        let c = a.matmul(&b).unwrap();
        for i in 0..4 {
            for j in 0..5 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += a.get(i, k) * b.get(k, j);
                }
                assert_relative_eq!(c.get(i, j), s, epsilon = 1e-14);
            }
        }
        let t = a.tr_matmul(&a).unwrap();
        assert_eq!(t.shape(), (3, 3));
        let oracle = a.transpose().matmul(&a).unwrap();
        for (x, y) in t.as_slice().iter().zip(oracle.as_slice()) {
            assert_relative_eq!(x, y, epsilon = 1e-14);
        }
    }

    #[test]
    fn matmul_dimension_mismatch_names_shapes() {
        let err = Matrix::zeros(2, 3).matmul(&Matrix::zeros(2, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)"), "{msg}");
    }

    #[test]
    fn frobenius_basic() {
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 2)), 0.0);
        let a = Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(frobenius_norm(&a), 5.0);
    }

    #[test]
    fn frobenius_matches_compensated_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random(5, 5, &mut rng);
        // Kahan-compensated accumulation as the extended-precision oracle
        let (mut s, mut c) = (0.0_f64, 0.0_f64);
        for &x in a.as_slice() {
            let y = x * x - c;
            let t = s + y;
            c = (t - s) - y;
            s = t;
        }
        assert_relative_eq!(frobenius_norm(&a), s.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn rejects_non_finite() {
        let err = Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 1 }));
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn spectral_norm_simple_cases() {
        let d = Matrix::diag(&[3.0, 1.0]);
        assert_relative_eq!(spectral_norm(&d, POWER_TOL, POWER_MAX_ITER).unwrap().value, 3.0, max_relative = 1e-9);
        let i = Matrix::identity(5);
        assert_relative_eq!(spectral_norm(&i, POWER_TOL, POWER_MAX_ITER).unwrap().value, 1.0, max_relative = 1e-12);
        let z = spectral_norm(&Matrix::zeros(3, 3), POWER_TOL, POWER_MAX_ITER).unwrap();
        assert_eq!(z.value, 0.0);
    }

    #[test]
    fn spectral_norm_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let b = random(6, 6, &mut rng);
            let a = b.tr_matmul(&b).unwrap();
            let (eig, _) = jacobi_eigen(&a);
            let top = eig.iter().cloned().fold(f64::MIN, f64::max);
            let est = spectral_norm(&a, 1e-14, 100_000).unwrap();
            assert_relative_eq!(est.value, top, max_relative = 1e-8);
        }
    }

    #[test]
    fn leading_eigvec_simple_cases() {
        let d = Matrix::diag(&[5.0, 2.0, 1.0]);
        let p = leading_eigvec(&d, POWER_TOL, POWER_MAX_ITER).unwrap();
        assert_relative_eq!(p.value, 5.0, max_relative = 1e-9);
        assert_relative_eq!(p.vector[0], 1.0, epsilon = 1e-8);

        let v = [1.0, 2.0, 2.0];
        let vvt = Matrix::from_vec(3, 3, (0..9).map(|k| v[k / 3] * v[k % 3]).collect()).unwrap();
        let p = leading_eigvec(&vvt, POWER_TOL, POWER_MAX_ITER).unwrap();
        assert_relative_eq!(p.value, 9.0, max_relative = 1e-12);
        for (x, y) in p.vector.iter().zip(v) {
            assert_relative_eq!(*x, y / 3.0, epsilon = 1e-12);
        }

        let i = leading_eigvec(&Matrix::identity(4), POWER_TOL, POWER_MAX_ITER).unwrap();
        assert!(i.vector.iter().all(|&x| (x - 0.5).abs() < 1e-15));

        let asym = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(leading_eigvec(&asym, POWER_TOL, POWER_MAX_ITER).is_err());
    }

    #[test]
    fn leading_eigvec_matches_jacobi_on_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = (0..8 * 12).map(|_| rng.random::<f64>()).collect();
        let m = Matrix::from_vec(8, 12, data).unwrap();
        let mmt = m.matmul(&m.transpose()).unwrap();
        let (eig, vecs) = jacobi_eigen(&mmt);
        let k = (0..8).max_by(|&a, &b| eig[a].total_cmp(&eig[b])).unwrap();
        let oracle = vecs.col(k);
        let p = leading_eigvec(&mmt, POWER_TOL, POWER_MAX_ITER).unwrap();
        let cos = dot(&p.vector, &oracle).abs() / norm2(&oracle);
        assert!(cos >= 1.0 - 1e-8, "cos = {cos}");
        assert!(p.vector.iter().all(|&x| x >= -POWER_TOL));
    }
}
