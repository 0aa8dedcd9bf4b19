//! Dense real matrices and the factorizations the rest of the crate needs.
//!
//! Shape mismatches in arithmetic are programming errors and panic; failures
//! that depend on the numerical input (asymmetry, non-convergence) are
//! reported through [`crate::Error`].

mod eigen;
pub(crate) mod gemm;
mod qr;
mod svd;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use gemm::{gemm, View, ViewMut};

pub use eigen::{symmetric_eigen, symmetric_eigenvalues, tridiagonal_eigen, SymmetricEigenResult};
pub use qr::{householder_qr, HaarReflectors, ThinQr};
pub use svd::{schatten_from_singular_values, schatten_norm, singular_values, svd, Svd};

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
        if self.rows * self.cols <= 64 {
            for i in 0..self.rows {
                writeln!(f, "  {:?}", self.row(i))?;
            }
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return invalid(format!(
                "{} entries cannot fill a {}x{} matrix",
                data.len(),
                rows,
                cols
            ));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return invalid(format!("non-finite entry at flat index {pos}"));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return invalid("ragged rows");
        }
        Matrix::from_vec(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        Matrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j])
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(rows * cols, data.len());
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = vec![0.0; self.data.len()];
        const B: usize = 32;
        for ib in (0..self.rows).step_by(B) {
            for jb in (0..self.cols).step_by(B) {
                for i in ib..(ib + B).min(self.rows) {
                    for j in jb..(jb + B).min(self.cols) {
                        out[j * self.rows + i] = self.data[i * self.cols + j];
                    }
                }
            }
        }
        Matrix::from_raw(self.cols, self.rows, out)
    }

    pub(crate) fn view(&self) -> View<'_> {
        View::new(&self.data, 0, self.rows, self.cols, self.cols)
    }

    pub(crate) fn view_mut(&mut self) -> ViewMut<'_> {
        let (r, c) = (self.rows, self.cols);
        ViewMut::new(&mut self.data, 0, r, c, c)
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        gemm(1.0, self.view(), other.view(), 0.0, out.view_mut());
        out
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_t shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.rows);
        gemm(1.0, self.view(), other.view().t(), 0.0, out.view_mut());
        out
    }

    /// `selfᵀ · other`.
    pub fn t_matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "t_matmul shape mismatch");
        let mut out = Matrix::zeros(self.cols, other.cols);
        gemm(1.0, self.view().t(), other.view(), 0.0, out.view_mut());
        out
    }

    /// `self · selfᵀ`, symmetrized exactly.
    pub fn gram(&self) -> Matrix {
        let mut g = self.matmul_t(self);
        g.symmetrize_in_place();
        g
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn t_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "t_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            axpy(xi, self.row(i), &mut out);
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_raw(self.rows, self.cols, self.data.iter().map(|x| x * s).collect())
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix::from_raw(self.rows, self.cols, data)
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "sub shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Matrix::from_raw(self.rows, self.cols, data)
    }

    /// `self + s·I`.
    pub fn add_identity(&self, s: f64) -> Matrix {
        assert!(self.is_square());
        let mut m = self.clone();
        for i in 0..self.rows {
            m.data[i * self.cols + i] += s;
        }
        m
    }

    /// `diag(d) · self`.
    pub fn scale_rows(&self, d: &[f64]) -> Matrix {
        assert_eq!(d.len(), self.rows);
        let mut m = self.clone();
        for (i, &di) in d.iter().enumerate() {
            m.data[i * self.cols..(i + 1) * self.cols]
                .iter_mut()
                .for_each(|x| *x *= di);
        }
        m
    }

    /// `self · diag(d)`.
    pub fn scale_cols(&self, d: &[f64]) -> Matrix {
        assert_eq!(d.len(), self.cols);
        let mut m = self.clone();
        for row in m.data.chunks_mut(self.cols) {
            row.iter_mut().zip(d).for_each(|(x, di)| *x *= di);
        }
        m
    }

    /// Contiguous block copy.
    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols, "submatrix out of bounds");
        Matrix::from_fn(nr, nc, |i, j| self.data[(r0 + i) * self.cols + c0 + j])
    }

    /// Embeds `self` in the top-left corner of an `n × m` zero matrix.
    pub fn embed(&self, n: usize, m: usize) -> Matrix {
        assert!(n >= self.rows && m >= self.cols);
        let mut out = Matrix::zeros(n, m);
        for i in 0..self.rows {
            out.data[i * m..i * m + self.cols].copy_from_slice(self.row(i));
        }
        out
    }

    /// Unnormalized trace.
    pub fn trace(&self) -> f64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// `tr(A) = Tr(A)/N`.
    pub fn normalized_trace(&self) -> f64 {
        self.trace() / self.rows as f64
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// `‖A − Aᵀ‖_max / max(‖A‖_max, tiny)`; infinite for non-square input.
    pub fn asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub(crate) fn symmetrize_in_place(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    /// `‖AᵀA − I‖_F` for the columns of `self`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.t_matmul(self).sub(&Matrix::identity(self.cols)).frobenius_norm()
    }
}

/// Normalized trace of a square matrix, `Tr(A)/N`.
pub fn normalized_trace(a: &Matrix) -> f64 {
    a.normalized_trace()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(Matrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(Matrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn products_agree_with_naive_loops() {
        let a = Matrix::from_fn(5, 7, |i, j| (i as f64 + 1.0) * 0.3 - j as f64 * 0.11);
        let b = Matrix::from_fn(7, 4, |i, j| ((i * 3 + j) as f64).cos());
        let c = a.matmul(&b);
        for i in 0..5 {
            for j in 0..4 {
                let want: f64 = (0..7).map(|k| a.get(i, k) * b.get(k, j)).sum();
                assert!((c.get(i, j) - want).abs() < 1e-12);
            }
        }
        let bt = b.transpose();
        assert!(a.matmul_t(&bt).sub(&c).max_abs() < 1e-12);
        assert!(a.transpose().t_matmul(&b).sub(&c).max_abs() < 1e-12);
        let x: Vec<f64> = (0..7).map(|i| i as f64 - 2.0).collect();
        let y = a.matvec(&x);
        let y2 = a.transpose().t_matvec(&x);
        for (u, v) in y.iter().zip(&y2) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_trace_examples() {
        assert_eq!(Matrix::identity(5).normalized_trace(), 1.0);
        assert_eq!(Matrix::from_diag(&[1.0, 2.0, 3.0]).normalized_trace(), 2.0);
    }

    #[test]
    fn diagonal_scalings() {
        let a = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        let d = [1.0, 2.0, 3.0];
        let left = Matrix::from_diag(&d).matmul(&a);
        let right = a.matmul(&Matrix::from_diag(&d));
        assert_eq!(a.scale_rows(&d), left);
        assert_eq!(a.scale_cols(&d), right);
    }

    #[test]
    fn embed_and_submatrix_roundtrip() {
        let a = Matrix::from_fn(2, 3, |i, j| (i + 10 * j) as f64);
        let big = a.embed(4, 5);
        assert_eq!(big.submatrix(0, 0, 2, 3), a);
        assert_eq!(big.get(3, 4), 0.0);
    }
}
