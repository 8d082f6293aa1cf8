//! Block Arnoldi iteration with deflation.

use crate::error::{Error, Result};
use crate::la::csr::CsrMatrix;
use crate::la::dense::DenseMatrix;
use crate::la::vec_ops;

/// Orthonormal block Krylov basis spanning span(U, AU, ..., A^{k-1} U),
/// with the block Hessenberg projection filled column by column.
///
/// Deflation: a column of the new block whose remainder after
/// orthogonalization falls below `1e-12 ||A||_1` adds no new direction;
/// the block width shrinks. Total deflation of a block is a breakdown
/// (normal termination: the basis spans an invariant subspace).
pub struct BlockKrylovBasis {
    cols: Vec<Vec<f64>>,
    /// Hessenberg entries, capacity-sized; h[(i, j)] couples basis column i
    /// to the image of basis column j under A.
    h: DenseMatrix,
    /// Start offsets of each block; the last entry equals `cols.len()`.
    block_starts: Vec<usize>,
    /// Completed block extensions.
    k: usize,
    breakdown: bool,
    deflation_tol: f64,
    matvecs: usize,
}

impl BlockKrylovBasis {
    /// Start from an orthonormal first block `u`; `capacity` bounds the
    /// total number of basis columns (block iterations times block width).
    pub fn new(u: &DenseMatrix, a_norm1: f64, capacity: usize) -> Result<Self> {
        let m = u.n_cols();
        if m == 0 {
            return Err(Error::Contract("block basis: empty first block".into()));
        }
        let gram = u.transpose().matmul(u)?;
        if gram.max_abs_diff(&DenseMatrix::identity(m)) > 1e-8 {
            return Err(Error::Contract(
                "block basis: first block is not orthonormal".into(),
            ));
        }
        let cap = capacity.max(2 * m);
        Ok(Self {
            cols: (0..m).map(|j| u.column(j)).collect(),
            h: DenseMatrix::zeros(cap, cap),
            block_starts: vec![0, m],
            k: 0,
            breakdown: false,
            deflation_tol: 1e-12 * a_norm1,
            matvecs: 0,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn happy_breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn matvecs(&self) -> usize {
        self.matvecs
    }

    /// Dimension of the usable Galerkin projection: all columns whose images
    /// under A have been orthogonalized (everything except the newest
    /// block; the full basis after breakdown).
    pub fn projection_dim(&self) -> usize {
        if self.breakdown {
            self.cols.len()
        } else {
            self.block_starts[self.k]
        }
    }

    /// One block extension. Returns false on total deflation (breakdown).
    pub fn extend(&mut self, a: &CsrMatrix) -> Result<bool> {
        if self.breakdown {
            return Ok(false);
        }
        let b_start = self.block_starts[self.k];
        let b_end = self.block_starts[self.k + 1];
        if self.cols.len() + (b_end - b_start) > self.h.n_rows() {
            return Err(Error::Contract(
                "block basis capacity exceeded; raise k_max".into(),
            ));
        }

        let base = self.cols.len();
        let mut kept = 0usize;
        for j_src in b_start..b_end {
            let mut w = a.mul_vec(&self.cols[j_src])?;
            self.matvecs += 1;
            // two orthogonalization passes against every column built so far
            for _pass in 0..2 {
                for (i, vi) in self.cols.iter().enumerate() {
                    let c = vec_ops::dot(vi, &w);
                    self.h.add_at(i, j_src, c);
                    vec_ops::axpy(-c, vi, &mut w);
                }
            }
            let norm = vec_ops::norm2(&w);
            if norm > self.deflation_tol {
                self.h.set(base + kept, j_src, norm);
                vec_ops::scale(1.0 / norm, &mut w);
                self.cols.push(w);
                kept += 1;
            }
        }

        if kept == 0 {
            self.breakdown = true;
            return Ok(false);
        }
        self.block_starts.push(self.cols.len());
        self.k += 1;
        Ok(true)
    }

    /// Square Galerkin projection H over `projection_dim()` columns.
    pub fn h_square(&self) -> DenseMatrix {
        let dim = self.projection_dim();
        let mut out = DenseMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                out.set(i, j, self.h.get(i, j));
            }
        }
        out
    }

    /// Subdiagonal coupling block: rows of the newest (unprocessed) block
    /// against the columns of the last processed block. Empty after
    /// breakdown, where the projection is exact.
    pub fn subdiag_block(&self) -> DenseMatrix {
        if self.breakdown || self.k == 0 {
            return DenseMatrix::zeros(0, 0);
        }
        let col_start = self.block_starts[self.k - 1];
        let col_end = self.block_starts[self.k];
        let row_start = col_end;
        let row_end = self.block_starts[self.k + 1];
        let mut out = DenseMatrix::zeros(row_end - row_start, col_end - col_start);
        for i in row_start..row_end {
            for j in col_start..col_end {
                out.set(i - row_start, j - col_start, self.h.get(i, j));
            }
        }
        out
    }

    /// Residual norm shortcut: || H_sub * (trailing block of u) ||.
    pub fn block_residual_norm(&self, u: &[f64]) -> f64 {
        let sub = self.subdiag_block();
        if sub.n_rows() == 0 {
            return 0.0;
        }
        let width = sub.n_cols();
        let tail = &u[u.len() - width..];
        let r = sub.mul_vec(tail).expect("tail width matches block");
        vec_ops::norm2(&r)
    }

    /// y = base + V[:, 0..len(u)] u
    pub fn lift(&self, base: &[f64], u: &[f64]) -> Vec<f64> {
        let mut y = base.to_vec();
        for (uj, vj) in u.iter().zip(&self.cols) {
            vec_ops::axpy(*uj, vj, &mut y);
        }
        y
    }

    pub fn v_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&self.cols).expect("columns share length")
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }
}
