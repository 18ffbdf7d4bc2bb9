use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, 0-based column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(n_cols: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indptr.is_empty() || indptr[0] != 0 {
            return Err(Error::DimensionMismatch("indptr must start at 0".into()));
        }
        if *indptr.last().unwrap() != indices.len() || indices.len() != values.len() {
            return Err(Error::DimensionMismatch("indptr, indices and values disagree".into()));
        }
        for (row, w) in indptr.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::DimensionMismatch(format!("indptr decreases at row {row}")));
            }
            let cols = &indices[w[0]..w[1]];
            if cols.windows(2).any(|c| c[0] >= c[1]) {
                return Err(Error::DimensionMismatch(format!(
                    "column indices of row {row} are not strictly increasing"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::DimensionMismatch(format!("row {row} exceeds {n_cols} columns")));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("matrix entry {v} is not finite")));
        }
        Ok(SparseMatrix { n_rows: indptr.len() - 1, n_cols, indptr, indices, values })
    }

    /// Builds a matrix from per-row `(column, value)` lists.
    pub fn from_rows<R>(n_cols: usize, rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: AsRef<[(usize, f64)]>,
    {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            for &(j, x) in row.as_ref() {
                indices.push(j);
                values.push(x);
            }
            indptr.push(indices.len());
        }
        SparseMatrix::new(n_cols, indptr, indices, values)
    }

    /// Dense row-major input; zeros are dropped.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged dense rows".into()));
        }
        SparseMatrix::from_rows(
            n_cols,
            rows.iter()
                .map(|r| r.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(j, &x)| (j, x)).collect::<Vec<_>>()),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored values, row by row.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of one row.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    #[inline]
    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &x)| x * w[j]).sum()
    }

    /// `out += alpha * row_i`.
    #[inline]
    pub fn row_axpy(&self, i: usize, alpha: f64, out: &mut [f64]) {
        let (cols, vals) = self.row(i);
        for (&j, &x) in cols.iter().zip(vals) {
            out[j] += alpha * x;
        }
    }

    /// `X w`.
    pub fn matvec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.row_dot(i, w)).collect()
    }

    /// `X^T z`.
    pub fn matvec_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                self.row_axpy(i, zi, &mut out);
            }
        }
        out
    }

    /// Keeps the rows listed in `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for &i in rows {
            let (c, v) = self.row(i);
            indices.extend_from_slice(c);
            values.extend_from_slice(v);
            indptr.push(indices.len());
        }
        SparseMatrix { n_rows: rows.len(), n_cols: self.n_cols, indptr, indices, values }
    }

    /// Widens the matrix to `n_cols` columns (no-op if already that wide).
    pub fn with_n_cols(mut self, n_cols: usize) -> Result<Self> {
        if n_cols < self.n_cols {
            return Err(Error::DimensionMismatch(format!("cannot shrink {} columns to {n_cols}", self.n_cols)));
        }
        self.n_cols = n_cols;
        Ok(self)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|i| {
                let mut r = vec![0.0; self.n_cols];
                let (c, v) = self.row(i);
                for (&j, &x) in c.iter().zip(v) {
                    r[j] = x;
                }
                r
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 3.0]);
        assert_eq!(m.matvec_transpose(&[1.0, 2.0]), vec![1.0, 6.0, 2.0]);
        assert_eq!(m.to_dense()[0], vec![1.0, 0.0, 2.0]);
    }

    #[test]
    fn rejects_unsorted_columns() {
        assert!(SparseMatrix::from_rows(3, vec![vec![(2, 1.0), (1, 1.0)]]).is_err());
        assert!(SparseMatrix::from_rows(2, vec![vec![(2, 1.0)]]).is_err());
    }
}
