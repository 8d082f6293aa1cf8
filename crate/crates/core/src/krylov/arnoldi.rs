//! Arnoldi iteration: orthonormal basis of the Krylov subspace and its
//! Hessenberg projection.

use crate::error::{Error, Result};
use crate::la::csr::CsrMatrix;
use crate::la::dense::DenseMatrix;
use crate::la::vec_ops;

/// Orthonormal Krylov basis V and upper-Hessenberg projection H built by
/// modified Gram-Schmidt with one reorthogonalization pass.
///
/// After k extensions, `v_cols` holds k+1 columns (or k on happy breakdown)
/// and column j of `h_cols` holds the j-th Hessenberg column including its
/// subdiagonal entry.
pub struct KrylovBasis {
    v_cols: Vec<Vec<f64>>,
    h_cols: Vec<Vec<f64>>,
    beta: f64,
    breakdown: bool,
    breakdown_tol: f64,
}

impl KrylovBasis {
    /// Start the iteration from `start`; `a_norm1` feeds the happy-breakdown
    /// threshold `1e-14 * ||A||_1`.
    pub fn new(start: &[f64], a_norm1: f64) -> Result<Self> {
        let beta = vec_ops::norm2(start);
        if beta == 0.0 {
            return Err(Error::Contract(
                "krylov basis: starting vector is zero".into(),
            ));
        }
        Ok(Self {
            v_cols: vec![vec_ops::scaled(1.0 / beta, start)],
            h_cols: Vec::new(),
            beta,
            breakdown: false,
            breakdown_tol: 1e-14 * a_norm1,
        })
    }

    /// Current subspace dimension k.
    pub fn k(&self) -> usize {
        self.h_cols.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn happy_breakdown(&self) -> bool {
        self.breakdown
    }

    /// Last subdiagonal entry H[k+1, k]; zero after happy breakdown.
    pub fn last_subdiag(&self) -> f64 {
        match self.h_cols.last() {
            Some(col) if !self.breakdown => col[col.len() - 1],
            _ => 0.0,
        }
    }

    /// One Arnoldi step. Returns false (without extending the basis) on
    /// happy breakdown, which is a normal outcome.
    pub fn extend(&mut self, a: &CsrMatrix) -> Result<bool> {
        if self.breakdown {
            return Ok(false);
        }
        let n = self.v_cols[0].len();
        if self.k() >= n {
            return Err(Error::Contract(
                "krylov basis cannot exceed the space dimension".into(),
            ));
        }
        let k = self.k();
        let mut w = a.mul_vec(&self.v_cols[k])?;
        let mut h_col = vec![0.0; k + 2];
        for (i, vi) in self.v_cols.iter().enumerate() {
            let c = vec_ops::dot(vi, &w);
            h_col[i] = c;
            vec_ops::axpy(-c, vi, &mut w);
        }
        // reorthogonalization pass
        for (i, vi) in self.v_cols.iter().enumerate() {
            let c = vec_ops::dot(vi, &w);
            h_col[i] += c;
            vec_ops::axpy(-c, vi, &mut w);
        }
        let w_norm = vec_ops::norm2(&w);
        h_col[k + 1] = w_norm;
        if w_norm <= self.breakdown_tol {
            self.breakdown = true;
            h_col[k + 1] = 0.0;
            self.h_cols.push(h_col);
            return Ok(false);
        }
        vec_ops::scale(1.0 / w_norm, &mut w);
        self.v_cols.push(w);
        self.h_cols.push(h_col);
        Ok(true)
    }

    /// Square k-by-k Hessenberg block.
    pub fn h_square(&self) -> DenseMatrix {
        let k = self.k();
        let mut h = DenseMatrix::zeros(k, k);
        for (j, col) in self.h_cols.iter().enumerate() {
            for i in 0..(j + 2).min(k) {
                h.set(i, j, col[i]);
            }
        }
        h
    }

    /// Rectangular (k+1)-by-k Hessenberg matrix.
    pub fn h_rect(&self) -> DenseMatrix {
        let k = self.k();
        let mut h = DenseMatrix::zeros(k + 1, k);
        for (j, col) in self.h_cols.iter().enumerate() {
            for i in 0..col.len().min(k + 1) {
                h.set(i, j, col[i]);
            }
        }
        h
    }

    /// Basis matrix with all stored columns.
    pub fn v_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(&self.v_cols).expect("columns share length")
    }

    /// y = base + V[:, 0..k] u
    pub fn lift(&self, base: &[f64], u: &[f64]) -> Vec<f64> {
        let mut y = base.to_vec();
        for (uj, vj) in u.iter().zip(&self.v_cols) {
            vec_ops::axpy(*uj, vj, &mut y);
        }
        y
    }
}
