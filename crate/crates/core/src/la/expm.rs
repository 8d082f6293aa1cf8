//! Dense matrix exponential (scaling and squaring with a degree-13 diagonal
//! Pade approximant) and phi-function evaluations built on it.

use crate::error::{Error, Result};
use crate::la::dense::{DenseLu, DenseMatrix};

/// 1-norm bound under which the degree-13 approximant is accurate without
/// further scaling (Higham 2005).
const PADE13_THETA: f64 = 5.371920351148152;

const PADE13_COEFFS: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Default dimension cap; the Hessenberg matrices arising from Krylov
/// projections stay far below it.
pub const EXPM_DIM_CAP: usize = 4096;

/// Matrix exponential of a square matrix.
pub fn expm(h: &DenseMatrix) -> Result<DenseMatrix> {
    if !h.is_square() {
        return Err(Error::Contract("expm: matrix not square".into()));
    }
    if h.n_rows() > EXPM_DIM_CAP {
        return Err(Error::Contract(format!(
            "expm: dimension {} exceeds cap {}",
            h.n_rows(),
            EXPM_DIM_CAP
        )));
    }
    let n = h.n_rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }

    let norm = h.norm1();
    let squarings = if norm > PADE13_THETA {
        (norm / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let mut a = h.clone();
    if squarings > 0 {
        a.scale_in_place(0.5f64.powi(squarings as i32));
    }

    // degree-13 Pade: r(A) = (V - U)^{-1} (V + U), U odd part, V even part
    let ident = DenseMatrix::identity(n);
    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    let b = &PADE13_COEFFS;
    let u_inner = a6
        .add_scaled(b[11] / b[13], &a4)?
        .add_scaled(b[9] / b[13], &a2)?;
    let mut u_poly = a6.matmul(&u_inner)?;
    u_poly.scale_in_place(b[13]);
    let u_poly = u_poly
        .add_scaled(b[7], &a6)?
        .add_scaled(b[5], &a4)?
        .add_scaled(b[3], &a2)?
        .add_scaled(b[1], &ident)?;
    let u = a.matmul(&u_poly)?;

    let v_inner = a6
        .add_scaled(b[10] / b[12], &a4)?
        .add_scaled(b[8] / b[12], &a2)?;
    let mut v = a6.matmul(&v_inner)?;
    v.scale_in_place(b[12]);
    let v = v
        .add_scaled(b[6], &a6)?
        .add_scaled(b[4], &a4)?
        .add_scaled(b[2], &a2)?
        .add_scaled(b[0], &ident)?;

    let denom = v.add_scaled(-1.0, &u)?;
    let numer = v.add_scaled(1.0, &u)?;
    let mut r = DenseLu::factor(&denom)?.solve_matrix(&numer)?;

    for _ in 0..squarings {
        r = r.matmul(&r)?;
    }
    Ok(r)
}

/// phi(z) = (e^z - 1)/z, with phi(0) = 1.
///
/// Near zero the direct quotient cancels catastrophically, so a short
/// Taylor expansion takes over for |z| < 1e-2.
pub fn phi(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        // 1 + z/2! + z^2/3! + ... , eight terms
        let mut term = 1.0;
        let mut acc = 1.0;
        for k in 2..=8 {
            term *= z / k as f64;
            acc += term;
        }
        acc
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Computes `t * phi(-t H) * b` for square `H`.
///
/// Uses the exponential of the augmented matrix [[-tH, t b], [0, 0]]: the
/// top block of its last column is exactly the requested action.
pub fn phi_action(h: &DenseMatrix, b: &[f64], t: f64) -> Result<Vec<f64>> {
    if !h.is_square() {
        return Err(Error::Contract("phi_action: matrix not square".into()));
    }
    let n = h.n_rows();
    if b.len() != n {
        return Err(Error::Contract(format!(
            "phi_action: vector length {} != dimension {n}",
            b.len()
        )));
    }
    if t == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut aug = DenseMatrix::zeros(n + 1, n + 1);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, -t * h.get(r, c));
        }
        aug.set(r, n, t * b[r]);
    }
    let e = expm(&aug)?;
    Ok((0..n).map(|r| e.get(r, n)).collect())
}
