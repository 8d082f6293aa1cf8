//! Thin singular value decomposition for tall matrices.
//!
//! A Householder QR pass reduces the tall input to its small square
//! triangular factor; a one-sided Jacobi iteration on that factor then
//! delivers singular values with high relative accuracy, which the
//! rank-structure diagnostics downstream depend on.

use crate::error::{Error, Result};
use crate::la::dense::DenseMatrix;
use crate::la::vec_ops;

#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Left singular vectors, one column per singular value; orthonormal.
    pub left: DenseMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    /// Right singular vectors (square); orthonormal columns.
    pub right: DenseMatrix,
}

impl SvdResult {
    /// Reconstruct `left * diag(sigma) * right^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.singular_values.len();
        let mut scaled = self.left.clone();
        let mut out = DenseMatrix::zeros(self.left.n_rows(), self.right.n_rows());
        for j in 0..n {
            for r in 0..scaled.n_rows() {
                let v = scaled.get(r, j) * self.singular_values[j];
                scaled.set(r, j, v);
            }
        }
        for r in 0..out.n_rows() {
            for c in 0..out.n_cols() {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += scaled.get(r, j) * self.right.get(c, j);
                }
                out.set(r, c, acc);
            }
        }
        out
    }
}

/// Thin SVD of a tall matrix (`n_rows >= n_cols`).
pub fn thin_svd(s: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = (s.n_rows(), s.n_cols());
    if m < n {
        return Err(Error::Contract(format!(
            "thin_svd: matrix is wide ({m}x{n}); pass the transpose"
        )));
    }
    if n == 0 {
        return Ok(SvdResult {
            left: DenseMatrix::zeros(m, 0),
            singular_values: vec![],
            right: DenseMatrix::zeros(0, 0),
        });
    }

    let (q, r) = householder_qr_thin(s);
    let (u_small, sigma, v) = jacobi_svd_square(&r);
    let mut left = q.matmul(&u_small)?;
    orthonormalize_null_columns(&mut left, &sigma);
    Ok(SvdResult {
        left,
        singular_values: sigma,
        right: v,
    })
}

/// Thin Householder QR: returns (Q with orthonormal columns m x n, R n x n
/// upper triangular).
pub fn householder_qr_thin(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (m, n) = (a.n_rows(), a.n_cols());
    let mut work = a.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);

    for k in 0..n {
        let mut v: Vec<f64> = (k..m).map(|r| work.get(r, k)).collect();
        let alpha = vec_ops::norm2(&v);
        if alpha == 0.0 {
            reflectors.push(vec![0.0; m - k]);
            continue;
        }
        let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
        v[0] += sign * alpha;
        let vnorm = vec_ops::norm2(&v);
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // apply I - 2 v v^T to the trailing block
        for c in k..n {
            let mut proj = 0.0;
            for (i, vi) in v.iter().enumerate() {
                proj += vi * work.get(k + i, c);
            }
            proj *= 2.0;
            for (i, vi) in v.iter().enumerate() {
                work.add_at(k + i, c, -proj * vi);
            }
        }
        reflectors.push(v);
    }

    let mut r = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r.set(i, j, work.get(i, j));
        }
    }

    // accumulate thin Q by applying reflectors to the first n identity columns
    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        q.set(j, j, 1.0);
    }
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        for c in 0..n {
            let mut proj = 0.0;
            for (i, vi) in v.iter().enumerate() {
                proj += vi * q.get(k + i, c);
            }
            proj *= 2.0;
            for (i, vi) in v.iter().enumerate() {
                q.add_at(k + i, c, -proj * vi);
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi SVD of a square matrix: A = U diag(sigma) V^T with
/// sigma sorted nonincreasing. Columns of U whose singular value is zero
/// are left as zero columns for the caller to complete.
fn jacobi_svd_square(a: &DenseMatrix) -> (DenseMatrix, Vec<f64>, DenseMatrix) {
    let n = a.n_rows();
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let tol = 1e-15;
    let max_sweeps = 100;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let aii = vec_ops::dot(&g[i], &g[i]);
                let ajj = vec_ops::dot(&g[j], &g[j]);
                let aij = vec_ops::dot(&g[i], &g[j]);
                if aii == 0.0 || ajj == 0.0 {
                    continue;
                }
                if aij.abs() <= tol * (aii * ajj).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..n {
                    let gi = g[i][r];
                    let gj = g[j][r];
                    g[i][r] = cs * gi - sn * gj;
                    g[j][r] = sn * gi + cs * gj;
                    let vi = v[i][r];
                    let vj = v[j][r];
                    v[i][r] = cs * vi - sn * vj;
                    v[j][r] = sn * vi + cs * vj;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = g.iter().map(|c| vec_ops::norm2(c)).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let mut u = DenseMatrix::zeros(n, n);
    let mut vv = DenseMatrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for (slot, &src) in order.iter().enumerate() {
        sigma[slot] = norms[src];
        if norms[src] > 0.0 {
            for r in 0..n {
                u.set(r, slot, g[src][r] / norms[src]);
            }
        }
        for r in 0..n {
            vv.set(r, slot, v[src][r]);
        }
    }
    (u, sigma, vv)
}

/// Replace zero columns (exactly zero singular value) with an orthonormal
/// completion so the left factor keeps orthonormal columns.
fn orthonormalize_null_columns(left: &mut DenseMatrix, sigma: &[f64]) {
    let m = left.n_rows();
    let n = sigma.len();
    for j in 0..n {
        if sigma[j] > 0.0 {
            continue;
        }
        // try coordinate directions, Gram-Schmidt against existing columns
        'candidates: for cand in 0..m {
            let mut col = vec![0.0; m];
            col[cand] = 1.0;
            for prev in 0..n {
                if prev == j {
                    continue;
                }
                if sigma[prev] == 0.0 && prev > j {
                    continue;
                }
                let pcol = left.column(prev);
                let proj = vec_ops::dot(&pcol, &col);
                vec_ops::axpy(-proj, &pcol, &mut col);
            }
            // second pass for orthogonality
            for prev in 0..n {
                if prev == j {
                    continue;
                }
                if sigma[prev] == 0.0 && prev > j {
                    continue;
                }
                let pcol = left.column(prev);
                let proj = vec_ops::dot(&pcol, &col);
                vec_ops::axpy(-proj, &pcol, &mut col);
            }
            let nrm = vec_ops::norm2(&col);
            if nrm > 0.5 {
                for r in 0..m {
                    left.set(r, j, col[r] / nrm);
                }
                break 'candidates;
            }
        }
    }
}
