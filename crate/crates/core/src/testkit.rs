//! Independent reference computations used by the test suites.
//!
//! Everything here deliberately avoids the production code paths it is used
//! to check: the exponential is summed as a scaled Taylor series rather than
//! a Pade approximant, and initial-value problems are integrated by brute
//! force Runge-Kutta.

use crate::la::dense::DenseMatrix;
use crate::la::vec_ops;

/// Matrix exponential by scaling and squaring of a plain Taylor series.
pub fn expm_series(a: &DenseMatrix) -> DenseMatrix {
    assert!(a.is_square());
    let n = a.n_rows();
    let norm = a.norm1();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let mut scaled = a.clone();
    scaled.scale_in_place(0.5f64.powi(squarings as i32));

    let mut result = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&scaled).unwrap();
        term.scale_in_place(1.0 / k as f64);
        result = result.add_scaled(1.0, &term).unwrap();
        if term.norm1() < 1e-300 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result).unwrap();
    }
    result
}

/// Exact solution of `y' = -A y + g`, `y(0) = v` at time `t` for constant
/// `g`, computed with the series exponential: variation of constants on the
/// augmented matrix.
pub fn variation_of_constants(a: &DenseMatrix, v: &[f64], g: &[f64], t: f64) -> Vec<f64> {
    let n = a.n_rows();
    assert_eq!(v.len(), n);
    assert_eq!(g.len(), n);
    let mut aug = DenseMatrix::zeros(n + 1, n + 1);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, -t * a.get(r, c));
        }
        aug.set(r, n, t * g[r]);
    }
    let e = expm_series(&aug);
    let mut y = vec![0.0; n];
    for r in 0..n {
        let mut acc = e.get(r, n);
        for c in 0..n {
            acc += e.get(r, c) * v[c];
        }
        y[r] = acc;
    }
    y
}

/// Fixed-step classical RK4 for `y' = f(t, y)`.
pub fn rk4<F: Fn(f64, &[f64]) -> Vec<f64>>(
    f: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
) -> Vec<f64> {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0.to_vec();
    let mut t = t0;
    for _ in 0..steps {
        let k1 = f(t, &y);
        let mut y2 = y.clone();
        vec_ops::axpy(0.5 * h, &k1, &mut y2);
        let k2 = f(t + 0.5 * h, &y2);
        let mut y3 = y.clone();
        vec_ops::axpy(0.5 * h, &k2, &mut y3);
        let k3 = f(t + 0.5 * h, &y3);
        let mut y4 = y.clone();
        vec_ops::axpy(h, &k3, &mut y4);
        let k4 = f(t + h, &y4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    y
}

/// Small deterministic pseudo-random generator (SplitMix64) so test inputs
/// are reproducible without external dependencies.
pub struct TestRng {
    state: u64,
}

impl TestRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    pub fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.uniform()).collect()
    }

    /// Random matrix with entries in [-1, 1).
    pub fn matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, self.uniform());
            }
        }
        m
    }

    /// Random matrix whose field of values has positive real part:
    /// B + diag shift, so that `y' = -A y` is stable.
    pub fn stable_matrix(&mut self, n: usize, scale: f64) -> DenseMatrix {
        let mut m = self.matrix(n, n);
        m.scale_in_place(scale);
        let shift = scale * n as f64;
        for i in 0..n {
            m.add_at(i, i, shift);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_exp_of_zero() {
        let e = expm_series(&DenseMatrix::zeros(2, 2));
        assert!(e.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn series_exp_scalar() {
        let a = DenseMatrix::diagonal(&[3.0]);
        let e = expm_series(&a);
        assert!((e.get(0, 0) - 3.0f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn rk4_scalar_decay() {
        let y = rk4(|_, y| vec![-y[0]], &[1.0], 0.0, 1.0, 1000);
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn rng_is_deterministic() {
        let mut a = TestRng::new(7);
        let mut b = TestRng::new(7);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
