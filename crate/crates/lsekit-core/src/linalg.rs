//! Dense symmetric linear algebra, just enough for GP posteriors.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// A `rows x cols` matrix filled with zeros.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Flat row-major view of the entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Row `r` as a slice.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Marker error: a pivot of the factorization was not strictly positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotPositiveDefinite;

/// Lower-triangular Cholesky factor `L` with `A = L L^T`, stored packed
/// row-major.
///
/// The factor is built one row at a time in Cholesky-Banachiewicz order, so
/// growing a factor with [`Cholesky::append_row`] produces bit-identical
/// entries to factoring the enlarged matrix from scratch.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// The factor of the empty (0 x 0) matrix.
    pub fn empty() -> Self {
        Self { n: 0, l: Vec::new() }
    }

    /// Factors a symmetric positive definite matrix. Only the lower triangle
    /// of `a` is read.
    pub fn factor(a: &Matrix) -> Result<Self, NotPositiveDefinite> {
        debug_assert_eq!(a.rows(), a.cols());
        let mut chol = Self::empty();
        for i in 0..a.rows() {
            chol.append_row(&a.row(i)[..i], a[(i, i)])?;
        }
        Ok(chol)
    }

    /// Extends `A` by one symmetric row/column and updates the factor.
    ///
    /// `off_diag` holds the covariances of the new point against the existing
    /// `n` points and `diag` the new diagonal entry.
    pub fn append_row(&mut self, off_diag: &[f64], diag: f64) -> Result<(), NotPositiveDefinite> {
        debug_assert_eq!(off_diag.len(), self.n);
        let start = self.l.len();
        for j in 0..self.n {
            let row_j = self.row(j);
            let mut acc = 0.0;
            for m in 0..j {
                acc += self.l[start + m] * row_j[m];
            }
            let v = (off_diag[j] - acc) / row_j[j];
            self.l.push(v);
        }
        let mut acc = 0.0;
        for m in start..start + self.n {
            acc += self.l[m] * self.l[m];
        }
        let pivot = diag - acc;
        if !(pivot > 0.0) {
            self.l.truncate(start);
            return Err(NotPositiveDefinite);
        }
        self.l.push(math::sqrt(pivot));
        self.n += 1;
        Ok(())
    }

    /// Matrix order `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row `i` of the factor, diagonal included (`i + 1` entries).
    pub fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.l[start..start + i + 1]
    }

    /// Solves `L z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut z = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = 0.0;
            for (m, zm) in z.iter().enumerate() {
                acc += row[m] * zm;
            }
            z.push((b[i] - acc) / row[i]);
        }
        z
    }

    /// Solves `L^T x = b` by back substitution.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for i in (0..self.n).rev() {
            let mut acc = 0.0;
            for j in i + 1..self.n {
                acc += self.row(j)[i] * x[j];
            }
            x[i] = (b[i] - acc) / self.row(i)[i];
        }
        x
    }

    /// Solves `A x = b` with `A = L L^T`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (ai, bi) in a.iter().zip(b) {
        acc += ai * bi;
    }
    acc
}
