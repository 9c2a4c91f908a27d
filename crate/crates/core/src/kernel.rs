//! Kernel evaluation and Gram-matrix assembly for the nonlinear NSVM.

use crate::error::Error;
use crate::linalg::{dot, Matrix, SymMatrix};

/// Kernel function. The RBF convention is `exp(-‖x-z‖² / (2σ²))`, so σ acts
/// as a length scale and shares the power-of-two grid used for the
/// regularization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { sigma: f64 },
}

impl KernelSpec {
    fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Evaluate the kernel on a pair of equal-length vectors.
    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64, Error> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }

    /// Gram matrix `K[i][j] = k(x_i, x_j)`, symmetric by construction.
    pub fn gram(&self, x: &Matrix) -> SymMatrix {
        SymMatrix::from_fn(x.rows(), |i, j| self.eval_unchecked(x.row(i), x.row(j)))
    }

    /// Rectangular kernel matrix `K[i][j] = k(x_i, z_j)`.
    pub fn cross_gram(&self, x: &Matrix, z: &Matrix) -> Result<Matrix, Error> {
        if x.cols() != z.cols() {
            return Err(Error::DimensionMismatch {
                expected: x.cols(),
                found: z.cols(),
            });
        }
        Ok(Matrix::from_fn(x.rows(), z.rows(), |i, j| {
            self.eval_unchecked(x.row(i), z.row(j))
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::jacobi_eigh;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rbf_at_zero_distance_is_one() {
        let k = KernelSpec::Rbf { sigma: 0.7 };
        assert_eq!(k.eval(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0);
    }

    #[test]
    fn rbf_known_value() {
        let k = KernelSpec::Rbf { sigma: 1.0 };
        let v = k.eval(&[0.0, 0.0], &[0.0, 2.0]).unwrap();
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn linear_is_inner_product() {
        assert_eq!(
            KernelSpec::Linear.eval(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            11.0
        );
        assert!(matches!(
            KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn linear_gram_on_orthonormal_rows_is_identity() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let g = KernelSpec::Linear.gram(&x);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rbf_gram_diagonal_is_ones() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 0.0]]);
        let g = KernelSpec::Rbf { sigma: 0.3 }.gram(&x);
        for i in 0..3 {
            assert_eq!(g.get(i, i), 1.0);
        }
    }

    #[test]
    fn cross_gram_against_self_equals_gram() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5], vec![0.0, 4.0]]);
        let spec = KernelSpec::Rbf { sigma: 1.3 };
        let g = spec.gram(&x);
        let c = spec.cross_gram(&x, &x).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g.get(i, j), c.get(i, j));
            }
        }
    }

    #[test]
    fn linear_gram_equals_x_xt_exactly() {
        let mut rng = StdRng::seed_from_u64(8);
        let x = Matrix::from_fn(6, 4, |_, _| rng.random_range(-2.0..2.0));
        let g = KernelSpec::Linear.gram(&x);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(g.get(i, j), dot(x.row(i), x.row(j)));
            }
        }
    }

    #[test]
    fn rbf_gram_is_numerically_psd() {
        let mut rng = StdRng::seed_from_u64(4);
        for _ in 0..5 {
            let m = rng.random_range(5..=20);
            let x = Matrix::from_fn(m, 3, |_, _| rng.random_range(-1.5..1.5));
            let g = KernelSpec::Rbf { sigma: 0.8 }.gram(&x);
            for i in 0..m {
                for j in 0..m {
                    let v = g.get(i, j);
                    assert!(v > 0.0 && v <= 1.0);
                    assert_eq!(v, g.get(j, i));
                }
            }
            let eig = jacobi_eigh(&g, 1e-12).unwrap();
            assert!(eig.values[0] >= -1e-10);
        }
    }
}
