//! Property tests for the linear-algebra kernels.

use expint::la::svd::householder_qr_thin;
use expint::la::vec_ops;
use expint::la::{expm, phi_action, thin_svd, CsrMatrix, DenseMatrix};
use expint::testkit::variation_of_constants;
use proptest::prelude::*;

fn dense_from_flat(n_rows: usize, n_cols: usize, values: &[f64]) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n_rows, n_cols);
    for r in 0..n_rows {
        for c in 0..n_cols {
            m.set(r, c, values[r * n_cols + c]);
        }
    }
    m
}

fn square_matrix(max_n: usize) -> impl Strategy<Value = DenseMatrix> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(-2.0f64..2.0, n * n)
            .prop_map(move |v| dense_from_flat(n, n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csr_transpose_consistency(
        n in 2usize..8,
        entries in proptest::collection::vec((0usize..8, 0usize..8, -5.0f64..5.0), 1..24),
        xs in proptest::collection::vec(-3.0f64..3.0, 8),
        ys in proptest::collection::vec(-3.0f64..3.0, 8),
    ) {
        let trips: Vec<(usize, usize, f64)> = entries
            .into_iter()
            .map(|(r, c, v)| (r % n, c % n, v))
            .collect();
        let a = CsrMatrix::from_triplets(n, n, &trips).unwrap();
        let at = a.transpose();
        let x = &xs[..n];
        let y = &ys[..n];
        let ax = a.mul_vec(x).unwrap();
        let aty = at.mul_vec(y).unwrap();
        let left = vec_ops::dot(y, &ax);
        let right = vec_ops::dot(&aty, x);
        let scale = vec_ops::norm2(&ax) * vec_ops::norm2(y) + 1e-30;
        prop_assert!((left - right).abs() <= 1e-13 * scale.max(1.0));
    }

    #[test]
    fn expm_inverse_identity(h in square_matrix(6)) {
        // keep the 1-norm under 10 as the contract states
        let mut h = h;
        let norm = h.norm1();
        if norm > 10.0 {
            h.scale_in_place(10.0 / norm);
        }
        let mut neg = h.clone();
        neg.scale_in_place(-1.0);
        let e_pos = expm(&h).unwrap();
        let e_neg = expm(&neg).unwrap();
        let product = e_pos.matmul(&e_neg).unwrap();
        let identity = DenseMatrix::identity(h.n_rows());
        prop_assert!(product.max_abs_diff(&identity) <= 1e-10);
    }

    #[test]
    fn phi_action_solves_constant_source_ivp(
        h in square_matrix(5),
        t in 0.1f64..3.0,
        seeds in proptest::collection::vec(-2.0f64..2.0, 10),
    ) {
        // v + t phi(-tH)(g - Hv) must equal the exact solution of
        // u' = -Hu + g at time t
        let n = h.n_rows();
        let v = &seeds[..n];
        let g = &seeds[5..5 + n];
        let hv = h.mul_vec(v).unwrap();
        let rhs = vec_ops::sub(g, &hv);
        let action = phi_action(&h, &rhs, t).unwrap();
        let y: Vec<f64> = v.iter().zip(&action).map(|(a, b)| a + b).collect();
        let reference = variation_of_constants(&h, v, g, t);
        let err = vec_ops::norm2(&vec_ops::sub(&y, &reference));
        let scale = vec_ops::norm2(&reference).max(1.0);
        prop_assert!(err <= 1e-10 * scale, "error {err}");
    }

    #[test]
    fn svd_singular_values_invariant_under_orthogonal_factor(
        tall in (4usize..10, 2usize..4).prop_flat_map(|(m, n)| {
            proptest::collection::vec(-2.0f64..2.0, m * n)
                .prop_map(move |v| dense_from_flat(m, n, &v))
        }),
        mixer in proptest::collection::vec(-1.0f64..1.0, 100),
    ) {
        let m = tall.n_rows();
        // random orthogonal factor from the QR of a square matrix
        let raw = dense_from_flat(m, m, &mixer[..m * m]);
        let shifted = raw.add_scaled(3.0, &DenseMatrix::identity(m)).unwrap();
        let (q, _) = householder_qr_thin(&shifted);
        let rotated = q.matmul(&tall).unwrap();

        let s1 = thin_svd(&tall).unwrap().singular_values;
        let s2 = thin_svd(&rotated).unwrap().singular_values;
        let top = s1[0].max(s2[0]).max(1e-300);
        for (a, b) in s1.iter().zip(&s2) {
            prop_assert!((a - b).abs() <= 1e-12 * top, "{a} vs {b}");
        }
    }

    #[test]
    fn svd_reconstructs_input(
        tall in (4usize..12, 2usize..5).prop_flat_map(|(m, n)| {
            proptest::collection::vec(-2.0f64..2.0, m * n)
                .prop_map(move |v| dense_from_flat(m, n, &v))
        }),
    ) {
        let svd = thin_svd(&tall).unwrap();
        let rebuilt = svd.reconstruct();
        let scale = svd.singular_values[0].max(1e-300);
        prop_assert!(rebuilt.max_abs_diff(&tall) <= 1e-12 * scale.max(1.0));
    }
}
