//! Cholesky factorization and solve for symmetric positive definite matrices.

use super::{LinalgError, SymMatrix};

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
///
/// All diagonal entries are strictly positive; factorization rejects any
/// pivot at or below `1e-14 * trace(A) / dim`, which keeps the test
/// scale-free.
#[derive(Debug, Clone)]
pub struct CholFactor {
    dim: usize,
    lower: Vec<f64>, // row-major, zero above the diagonal
}

impl CholFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Solve `L y = b` (forward substitution).
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - super::dot(&self.lower[i * n..i * n + i], &y[..i]);
            y[i] = s / self.lower[i * n + i];
        }
        y
    }

    /// Solve `Lᵀ x = y` (back substitution).
    pub fn backward(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for (xj, row) in x[i + 1..].iter().zip(self.lower[(i + 1) * n..].chunks(n)) {
                s -= row[i] * xj;
            }
            x[i] = s / self.lower[i * n + i];
        }
        x
    }

    /// `L Lᵀ`, for residual checks.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        SymMatrix::from_fn(n, |i, j| {
            let mut s = 0.0;
            for k in 0..=i.min(j) {
                s += self.lower[i * n + k] * self.lower[j * n + k];
            }
            s
        })
    }
}

/// Factor a symmetric positive definite matrix as `L Lᵀ`.
pub fn cholesky_factor(a: &SymMatrix) -> Result<CholFactor, LinalgError> {
    let n = a.dim();
    let pivot_floor = (1e-14 * a.trace() / n as f64).max(0.0);
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= lower[i * n + k] * lower[j * n + k];
            }
            if i == j {
                if s <= pivot_floor {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                lower[i * n + i] = s.sqrt();
            } else {
                lower[i * n + j] = s / lower[j * n + j];
            }
        }
    }
    Ok(CholFactor { dim: n, lower })
}

/// Solve `A x = b` given the Cholesky factor of `A`.
pub fn spd_solve(f: &CholFactor, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != f.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: f.dim(),
            found: b.len(),
        });
    }
    Ok(f.backward(&f.forward(b)))
}
