//! Minimal sparse/dense matrix support shared by the GCN and sparsifier.
//!
//! Dense data lives in `ndarray::Array2<f64>` (row-major). `CsrMatrix` covers
//! the two sparse products the GCN needs: `A · B` and `Aᵀ · B` with a dense
//! right-hand side. Decompositions (SVD, Cholesky, eigen) go through
//! nalgebra; the converters below bridge the two representations.

use ndarray::Array2;

/// Compressed sparse row matrix, f64 values, u32 column indices.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from triplets. Entries must be sorted row-major with no
    /// duplicates; zero values are kept as given.
    pub fn from_sorted_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Self {
        let mut indptr = vec![0usize; n_rows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            debug_assert!((r as usize) < n_rows && (c as usize) < n_cols);
            debug_assert!(last.is_none_or(|p| p < (r, c)), "triplets out of order");
            last = Some((r, c));
            indptr[r as usize + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for i in 0..n_rows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            indptr,
            indices,
            values,
        }
    }

    /// Keep the exact nonzero entries of a dense matrix.
    pub fn from_dense(dense: &Array2<f64>) -> Self {
        let (n_rows, n_cols) = dense.dim();
        let triplets = dense.indexed_iter().filter_map(|((i, j), &v)| {
            (v != 0.0).then_some((i as u32, j as u32, v))
        });
        Self::from_sorted_triplets(n_rows, n_cols, triplets.collect::<Vec<_>>())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_sorted_triplets(n, n, (0..n).map(|i| (i as u32, i as u32, 1.0)))
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let span = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    /// `self · rhs` into a fresh dense matrix. Accumulation order is fixed
    /// (row-major over stored entries), so results are reproducible.
    pub fn matmul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        self.matmul_dense_with_values(&self.values, rhs)
    }

    /// Same as [`matmul_dense`](Self::matmul_dense) but with substitute
    /// values (e.g. a dropout-masked copy) sharing this matrix's pattern.
    pub fn matmul_dense_with_values(&self, values: &[f64], rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.n_cols, rhs.nrows(), "csr matmul shape mismatch");
        assert_eq!(values.len(), self.values.len());
        let k = rhs.ncols();
        let rhs_s = rhs.as_slice().expect("contiguous rhs");
        let mut out = Array2::zeros((self.n_rows, k));
        let out_s = out.as_slice_mut().expect("contiguous out");
        for i in 0..self.n_rows {
            let row_out = &mut out_s[i * k..(i + 1) * k];
            for idx in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[idx] as usize;
                let v = values[idx];
                let rhs_row = &rhs_s[j * k..(j + 1) * k];
                for (o, r) in row_out.iter_mut().zip(rhs_row) {
                    *o += v * r;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` with substitute values, accumulated in stored-entry
    /// order.
    pub fn transpose_matmul_dense_with_values(
        &self,
        values: &[f64],
        rhs: &Array2<f64>,
    ) -> Array2<f64> {
        assert_eq!(self.n_rows, rhs.nrows(), "csr tranpose matmul shape mismatch");
        assert_eq!(values.len(), self.values.len());
        let k = rhs.ncols();
        let rhs_s = rhs.as_slice().expect("contiguous rhs");
        let mut out = Array2::zeros((self.n_cols, k));
        let out_s = out.as_slice_mut().expect("contiguous out");
        for i in 0..self.n_rows {
            let rhs_row = &rhs_s[i * k..(i + 1) * k];
            for idx in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[idx] as usize;
                let v = values[idx];
                let out_row = &mut out_s[j * k..(j + 1) * k];
                for (o, r) in out_row.iter_mut().zip(rhs_row) {
                    *o += v * r;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[[i, j as usize]] = v;
            }
        }
        out
    }
}

/// Row-major ndarray -> column-major nalgebra.
pub fn to_nalgebra(a: &Array2<f64>) -> nalgebra::DMatrix<f64> {
    let (r, c) = a.dim();
    nalgebra::DMatrix::from_fn(r, c, |i, j| a[[i, j]])
}

/// Column-major nalgebra -> row-major ndarray.
pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csr_matches_dense_product() {
        let dense = array![[1.0, 0.0, 2.0], [0.0, 0.0, 0.0], [0.0, 3.0, 4.0]];
        let csr = CsrMatrix::from_dense(&dense);
        assert_eq!(csr.nnz(), 4);
        let rhs = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let got = csr.matmul_dense(&rhs);
        let want = dense.dot(&rhs);
        assert_eq!(got, want);
        let got_t = csr.transpose_matmul_dense_with_values(csr.values(), &rhs);
        let want_t = dense.t().dot(&rhs);
        assert_eq!(got_t, want_t);
    }

    #[test]
    fn identity_roundtrip() {
        let id = CsrMatrix::identity(4);
        let rhs = Array2::from_shape_fn((4, 3), |(i, j)| (i * 3 + j) as f64);
        assert_eq!(id.matmul_dense(&rhs), rhs);
        assert_eq!(id.to_dense(), Array2::<f64>::eye(4));
    }
}
