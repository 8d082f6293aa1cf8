//! Compressed sparse row matrix.

use crate::error::{Error, Result};

/// Sparse matrix in compressed sparse row form.
///
/// Structural invariants, checked on construction:
/// - `row_ptr` is nondecreasing, `row_ptr[0] == 0`,
///   `row_ptr[n_rows] == col_idx.len() == values.len()`;
/// - within each row, column indices are strictly increasing and `< n_cols`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 {
            return Err(Error::Contract(format!(
                "row_ptr length {} != n_rows + 1 = {}",
                row_ptr.len(),
                n_rows + 1
            )));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != values.len() || col_idx.len() != values.len() {
            return Err(Error::Contract(
                "row_ptr endpoints must span col_idx/values".into(),
            ));
        }
        for r in 0..n_rows {
            if row_ptr[r] > row_ptr[r + 1] {
                return Err(Error::Contract(format!("row_ptr decreases at row {r}")));
            }
            let row = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::Contract(format!(
                        "column indices not strictly increasing in row {r}"
                    )));
                }
            }
            if let Some(&last) = row.last() {
                if last >= n_cols {
                    return Err(Error::Contract(format!(
                        "column index {last} out of bounds in row {r}"
                    )));
                }
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Build from unordered triplets; duplicate entries are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(r, c, _) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Contract(format!(
                    "triplet ({r},{c}) out of bounds for {n_rows}x{n_cols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut idx = 0;
        for r in 0..n_rows {
            let row_start = col_idx.len();
            while idx < sorted.len() && sorted[idx].0 == r {
                let (_, c, v) = sorted[idx];
                if col_idx.len() > row_start && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
                idx += 1;
            }
            row_ptr[r + 1] = col_idx.len();
        }
        Self::new(n_rows, n_cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Matrix-vector product `A * x`. Per-row accumulation runs left to
    /// right in column order, so the result is bit-reproducible.
    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Contract(format!(
                "mul_vec: vector length {} != n_cols {}",
                x.len(),
                self.n_cols
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    /// Materialized transpose.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = self.values[k];
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Matrix 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        let mut col_sums = vec![0.0; self.n_cols];
        for k in 0..self.nnz() {
            col_sums[self.col_idx[k]] += self.values[k].abs();
        }
        col_sums.iter().cloned().fold(0.0, f64::max)
    }

    /// `alpha * self + beta * other` with merged sparsity patterns.
    pub fn linear_combination(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::Contract("linear_combination: shape mismatch".into()));
        }
        let mut row_ptr = vec![0usize; self.n_rows + 1];
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.n_rows {
            let (mut i, end_i) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let (mut j, end_j) = (other.row_ptr[r], other.row_ptr[r + 1]);
            while i < end_i || j < end_j {
                let ci = if i < end_i { self.col_idx[i] } else { usize::MAX };
                let cj = if j < end_j { other.col_idx[j] } else { usize::MAX };
                if ci < cj {
                    col_idx.push(ci);
                    values.push(alpha * self.values[i]);
                    i += 1;
                } else if cj < ci {
                    col_idx.push(cj);
                    values.push(beta * other.values[j]);
                    j += 1;
                } else {
                    col_idx.push(ci);
                    values.push(alpha * self.values[i] + beta * other.values[j]);
                    i += 1;
                    j += 1;
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `I - gamma * self` (square matrices only). The result always carries
    /// an explicit diagonal entry, which downstream factorization needs.
    pub fn shifted_identity(&self, gamma: f64) -> Result<CsrMatrix> {
        if self.n_rows != self.n_cols {
            return Err(Error::Contract("shifted_identity: matrix not square".into()));
        }
        CsrMatrix::identity(self.n_rows).linear_combination(1.0, self, -gamma)
    }

    /// Scale row `r` by `d[r]` (used for lumped-mass scaling).
    pub fn scale_rows(&mut self, d: &[f64]) -> Result<()> {
        if d.len() != self.n_rows {
            return Err(Error::Contract("scale_rows: diagonal length mismatch".into()));
        }
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                self.values[k] *= d[r];
            }
        }
        Ok(())
    }

    /// Dense copy, row-major. Intended for small oracles in tests.
    pub fn to_dense(&self) -> crate::la::DenseMatrix {
        let mut m = crate::la::DenseMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for (c, v) in self.iter_row(r) {
                m.set(r, c, v);
            }
        }
        m
    }
}
