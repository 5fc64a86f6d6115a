use nalgebra::{DMatrix, DVector};

use crate::error::{shape, Error, Result};

/// Dense real matrix stored column-major.
///
/// A thin wrapper over [`nalgebra::DMatrix`] that enforces a non-empty shape
/// and finite entries at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    inner: DMatrix<f64>,
}

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Contract(format!("non-finite entry at flat index {i}"))),
        None => Ok(()),
    }
}

impl DenseMatrix {
    /// Builds a matrix from column-major data.
    pub fn from_col_major(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(shape(format!("empty matrix {n_rows}x{n_cols}")));
        }
        if data.len() != n_rows * n_cols {
            return Err(shape(format!(
                "data length {} does not match {n_rows}x{n_cols}",
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { inner: DMatrix::from_vec(n_rows, n_cols, data) })
    }

    /// Builds a matrix from row-major data, the natural layout of a CSV file.
    pub fn from_row_major(n_rows: usize, n_cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(shape(format!(
                "data length {} does not match {n_rows}x{n_cols}",
                data.len()
            )));
        }
        if n_rows == 0 || n_cols == 0 {
            return Err(shape(format!("empty matrix {n_rows}x{n_cols}")));
        }
        check_finite(data)?;
        Ok(Self { inner: DMatrix::from_row_slice(n_rows, n_cols, data) })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(shape(format!("row {i} has length {} (expected {n_cols})", rows[i].len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_major(n_rows, n_cols, &flat)
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_nalgebra(DMatrix::from_fn(n_rows, n_cols, f))
    }

    pub fn from_nalgebra(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(shape(format!("empty matrix {}x{}", inner.nrows(), inner.ncols())));
        }
        check_finite(inner.as_slice())?;
        Ok(Self { inner })
    }

    /// Skips the finiteness scan; for results of arithmetic on valid matrices.
    pub(crate) fn from_nalgebra_unchecked(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Self { inner }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_nalgebra(DMatrix::identity(n, n))
    }

    pub fn n_rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.inner.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[f64] {
        self.inner.as_slice()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n_rows();
        &self.inner.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.inner.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i)).collect()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_nalgebra(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_nalgebra_unchecked(self.inner.transpose())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols() != other.n_rows() {
            return Err(shape(format!(
                "cannot multiply {:?} by {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(Self::from_nalgebra_unchecked(&self.inner * &other.inner))
    }

    /// `selfᵀ self`.
    pub fn gram(&self) -> DenseMatrix {
        Self::from_nalgebra_unchecked(self.inner.tr_mul(&self.inner))
    }

    /// `self * v` for a vector of length `n_cols`.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_cols() {
            return Err(shape(format!("vector length {} vs {} columns", v.len(), self.n_cols())));
        }
        Ok((&self.inner * DVector::from_column_slice(v)).as_slice().to_vec())
    }

    /// `selfᵀ v` for a vector of length `n_rows`.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_rows() {
            return Err(shape(format!("vector length {} vs {} rows", v.len(), self.n_rows())));
        }
        Ok(self.inner.tr_mul(&DVector::from_column_slice(v)).as_slice().to_vec())
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.inner.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Rows `indices` gathered into a new matrix, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<DenseMatrix> {
        if indices.is_empty() {
            return Err(shape("no rows selected"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_rows()) {
            return Err(shape(format!("row index {bad} out of range for {} rows", self.n_rows())));
        }
        Ok(Self::from_nalgebra_unchecked(self.inner.select_rows(indices)))
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_rows() != other.n_rows() {
            return Err(shape(format!("row counts differ: {} vs {}", self.n_rows(), other.n_rows())));
        }
        let mut data = self.inner.as_slice().to_vec();
        data.extend_from_slice(other.inner.as_slice());
        Ok(Self::from_nalgebra_unchecked(DMatrix::from_vec(
            self.n_rows(),
            self.n_cols() + other.n_cols(),
            data,
        )))
    }
}
