//! Row-oriented feature storage: CSR for count/indicator features, dense
//! rows for projected features.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// A borrowed view of one feature row.
#[derive(Debug, Clone, Copy)]
pub enum RowView<'a> {
    Sparse { indices: &'a [u32], values: &'a [f64] },
    Dense(&'a [f64]),
}

impl<'a> RowView<'a> {
    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        match *self {
            RowView::Sparse { indices, values } => indices
                .iter()
                .zip(values)
                .map(|(&j, &v)| v * w[j as usize])
                .sum(),
            RowView::Dense(x) => x.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    /// `out += alpha * row`
    #[inline]
    pub fn axpy(&self, alpha: f64, out: &mut [f64]) {
        match *self {
            RowView::Sparse { indices, values } => {
                for (&j, &v) in indices.iter().zip(values) {
                    out[j as usize] += alpha * v;
                }
            }
            RowView::Dense(x) => {
                for (o, &v) in out.iter_mut().zip(x) {
                    *o += alpha * v;
                }
            }
        }
    }

    /// Stored entries as `(column, value)`; dense rows yield every column.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match *self {
            RowView::Sparse { indices, values } => Box::new(
                indices
                    .iter()
                    .zip(values)
                    .map(|(&j, &v)| (j as usize, v)),
            ),
            RowView::Dense(x) => Box::new(x.iter().copied().enumerate()),
        }
    }

    pub fn nnz(&self) -> usize {
        match self {
            RowView::Sparse { indices, .. } => indices.len(),
            RowView::Dense(x) => x.len(),
        }
    }

    pub fn squared_norm(&self) -> f64 {
        match *self {
            RowView::Sparse { values, .. } => values.iter().map(|v| v * v).sum(),
            RowView::Dense(x) => x.iter().map(|v| v * v).sum(),
        }
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy(1.0, &mut out);
        out
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsrMatrix {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs in strictly increasing
    /// column order.
    pub fn push_row<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let start = self.indices.len();
        for (j, v) in entries {
            if j as usize >= self.ncols {
                self.truncate_to(start);
                return Err(Error::DimensionMismatch {
                    expected: self.ncols,
                    actual: j as usize + 1,
                });
            }
            if self.indices.len() > start && *self.indices.last().unwrap() >= j {
                self.truncate_to(start);
                return Err(Error::InvalidDimension(
                    "row indices must be strictly increasing".into(),
                ));
            }
            self.indices.push(j);
            self.values.push(v);
        }
        self.indptr.push(self.indices.len());
        Ok(())
    }

    fn truncate_to(&mut self, len: usize) {
        self.indices.truncate(len);
        self.values.truncate(len);
    }

    pub(crate) fn push_row_unchecked(&mut self, indices: &[u32], values: &[f64]) {
        self.indices.extend_from_slice(indices);
        self.values.extend_from_slice(values);
        self.indptr.push(self.indices.len());
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        RowView::Sparse {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|i| self.row(i).dot(x)).collect()
    }

    /// `y = A^T x`
    pub fn mul_vec_transposed(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            self.row(i).axpy(xi, &mut y);
        }
        y
    }

    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut out = CsrMatrix::new(self.ncols);
        for &i in rows {
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            out.push_row_unchecked(&self.indices[a..b], &self.values[a..b]);
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.nrows(), self.ncols);
        for i in 0..self.nrows() {
            self.row(i).axpy(1.0, m.row_mut(i));
        }
        m
    }
}

/// Model input: either sparse rows or a dense row-major block.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMatrix {
    Sparse(CsrMatrix),
    Dense(DenseMatrix),
}

impl FeatureMatrix {
    pub fn nrows(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.nrows(),
            FeatureMatrix::Dense(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            FeatureMatrix::Sparse(m) => m.ncols(),
            FeatureMatrix::Dense(m) => m.ncols(),
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> RowView<'_> {
        match self {
            FeatureMatrix::Sparse(m) => m.row(i),
            FeatureMatrix::Dense(m) => RowView::Dense(m.row(i)),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        match self {
            FeatureMatrix::Sparse(m) => FeatureMatrix::Sparse(m.select_rows(rows)),
            FeatureMatrix::Dense(m) => FeatureMatrix::Dense(m.select_rows(rows)),
        }
    }

    /// Column means.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.ncols()];
        let n = self.nrows();
        for i in 0..n {
            self.row(i).axpy(1.0, &mut mean);
        }
        if n > 0 {
            mean.iter_mut().for_each(|m| *m /= n as f64);
        }
        mean
    }
}

impl From<CsrMatrix> for FeatureMatrix {
    fn from(m: CsrMatrix) -> Self {
        FeatureMatrix::Sparse(m)
    }
}

impl From<DenseMatrix> for FeatureMatrix {
    fn from(m: DenseMatrix) -> Self {
        FeatureMatrix::Dense(m)
    }
}
