use std::fmt;
use std::ops::{Index, IndexMut};

use faer::{Mat, MatRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KoopError, Result};

/// Dense column-major `f64` matrix whose entries are all finite.
///
/// Thin wrapper over [`faer::Mat`]; the checked constructors reject NaN/Inf so
/// every estimator downstream can assume clean data.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    inner: Mat<f64>,
}

impl Matrix {
    /// Builds a matrix from column-major `data`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(KoopError::dims(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(KoopError::NonFinite(format!(
                "matrix entry ({}, {})",
                pos % rows.max(1),
                pos / rows.max(1)
            )));
        }
        Ok(Self {
            inner: Mat::from_fn(rows, cols, |i, j| data[i + j * rows]),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Mat::identity(n, n),
        }
    }

    /// Checked element-wise constructor.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_faer(Mat::from_fn(rows, cols, f))
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(KoopError::dims("columns have unequal lengths"));
        }
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(KoopError::dims("rows have unequal lengths"));
        }
        Self::from_fn(rows.len(), cols, |i, j| rows[i][j])
    }

    pub fn column_vector(v: &[f64]) -> Result<Self> {
        Self::from_fn(v.len(), 1, |i, _| v[i])
    }

    pub fn row_vector(v: &[f64]) -> Result<Self> {
        Self::from_fn(1, v.len(), |_, j| v[j])
    }

    pub fn from_faer(inner: Mat<f64>) -> Result<Self> {
        for j in 0..inner.ncols() {
            if let Some(i) = inner.col_as_slice(j).iter().position(|v| !v.is_finite()) {
                return Err(KoopError::NonFinite(format!("matrix entry ({i}, {j})")));
            }
        }
        Ok(Self { inner })
    }

    /// Wraps a product of finite matrices. Overflow can still produce Inf, which
    /// callers that care check via [`Matrix::is_finite`].
    pub(crate) fn from_faer_unchecked(inner: Mat<f64>) -> Self {
        Self { inner }
    }

    pub fn as_faer(&self) -> MatRef<'_, f64> {
        self.inner.as_ref()
    }

    pub fn into_faer(self) -> Mat<f64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn is_empty(&self) -> bool {
        self.rows() == 0 || self.cols() == 0
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| self.col(j).iter().all(|v| v.is_finite()))
    }

    pub fn col(&self, j: usize) -> &[f64] {
        self.inner.col_as_slice(j)
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        self.inner.col_as_slice_mut(j)
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols()).map(|j| self[(i, j)]).collect()
    }

    /// Column-major copy of the entries.
    pub fn to_col_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for j in 0..self.cols() {
            out.extend_from_slice(self.col(j));
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Self::from_faer_unchecked(self.inner.transpose().to_owned())
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols() != rhs.rows() {
            return Err(KoopError::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(Self::from_faer_unchecked(&self.inner * &rhs.inner))
    }

    /// `self * x`, accumulated column by column.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows()];
        self.mul_vec_acc(x, &mut out);
        out
    }

    /// `out += self * x`.
    pub fn mul_vec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.col(j)) {
                *o += a * xj;
            }
        }
    }

    /// `selfᵀ * x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows());
        (0..self.cols())
            .map(|j| self.col(j).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.shape() != rhs.shape() {
            return Err(KoopError::dims("subtraction of unequal shapes"));
        }
        Ok(Self::from_faer_unchecked(&self.inner - &rhs.inner))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Self::from_faer_unchecked(Mat::from_fn(self.rows(), self.cols(), |i, j| {
            s * self.inner[(i, j)]
        }))
    }

    pub fn frobenius_norm(&self) -> f64 {
        (0..self.cols())
            .flat_map(|j| self.col(j).iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        (0..self.cols())
            .flat_map(|j| self.col(j).iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Stacks blocks vertically; all blocks must share a column count.
    pub fn vstack(blocks: &[&Matrix]) -> Result<Matrix> {
        let cols = blocks.first().map_or(0, |b| b.cols());
        if blocks.iter().any(|b| b.cols() != cols) {
            return Err(KoopError::dims("vstack blocks have unequal column counts"));
        }
        let rows: usize = blocks.iter().map(|b| b.rows()).sum();
        let mut out = Mat::<f64>::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            out.as_mut()
                .submatrix_mut(r0, 0, b.rows(), cols)
                .copy_from(b.as_faer());
            r0 += b.rows();
        }
        Ok(Self::from_faer_unchecked(out))
    }

    /// Concatenates blocks horizontally; all blocks must share a row count.
    pub fn hstack(blocks: &[&Matrix]) -> Result<Matrix> {
        let rows = blocks.first().map_or(0, |b| b.rows());
        if blocks.iter().any(|b| b.rows() != rows) {
            return Err(KoopError::dims("hstack blocks have unequal row counts"));
        }
        let cols: usize = blocks.iter().map(|b| b.cols()).sum();
        let mut out = Mat::<f64>::zeros(rows, cols);
        let mut c0 = 0;
        for b in blocks {
            out.as_mut()
                .submatrix_mut(0, c0, rows, b.cols())
                .copy_from(b.as_faer());
            c0 += b.cols();
        }
        Ok(Self::from_faer_unchecked(out))
    }

    /// Copy of rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix {
        Self::from_faer_unchecked(self.inner.subrows(start, end - start).to_owned())
    }

    /// Copy of columns `start..end`.
    pub fn col_block(&self, start: usize, end: usize) -> Matrix {
        Self::from_faer_unchecked(self.inner.subcols(start, end - start).to_owned())
    }

    /// Columns reordered by `order`.
    pub fn select_cols(&self, order: &[usize]) -> Matrix {
        Self::from_faer_unchecked(Mat::from_fn(self.rows(), order.len(), |i, j| {
            self.inner[(i, order[j])]
        }))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.inner[(i, j)]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.inner[(i, j)]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows().min(8) {
            write!(f, "  ")?;
            for j in 0..self.cols().min(8) {
                write!(f, "{:>12.5e} ", self[(i, j)])?;
            }
            if self.cols() > 8 {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows() > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            data: self.to_col_major(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        Matrix::new(repr.rows, repr.cols, repr.data).map_err(serde::de::Error::custom)
    }
}
