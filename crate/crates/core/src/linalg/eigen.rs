//! Symmetric eigendecomposition by cyclic Jacobi sweeps, plus the two
//! derived solvers built on it: the smallest eigenvalue of a block-diagonal
//! matrix and the smallest generalized eigenpair of a symmetric pencil.
//!
//! Jacobi is chosen over QR iteration: dimensions here stay small, and the
//! rotation sweep is simple to reason about and to test.

use super::chol::cholesky_factor;
use super::{norm, LinalgError, Matrix, SymMatrix};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = V diag(values) Vᵀ` with orthonormal columns in
/// `V` and `values` sorted ascending (ties keep discovery order).
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomp {
    /// The `i`-th eigenvector (column of `V`).
    pub fn vector(&self, i: usize) -> Vec<f64> {
        (0..self.vectors.rows())
            .map(|r| self.vectors.get(r, i))
            .collect()
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius mass falls to
/// `tol * ‖A‖_F`; after [`MAX_SWEEPS`] sweeps the solver reports
/// `NoConvergence`.
pub fn jacobi_eigh(a: &SymMatrix, tol: f64) -> Result<EigenDecomp, LinalgError> {
    assert!(tol > 0.0, "tol must be positive");
    let n = a.dim();
    let mut m = a.raw().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob = a.frob_norm();
    let target = tol * frob;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += 2.0 * m[p * n + q] * m[p * n + q];
                }
            }
            s.sqrt()
        };
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = m[k * n + p];
                        let akq = m[k * n + q];
                        m[k * n + p] = c * akp - s * akq;
                        m[p * n + k] = m[k * n + p];
                        m[k * n + q] = s * akp + c * akq;
                        m[q * n + k] = m[k * n + q];
                    }
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // final check after the last sweep
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() > target {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[r * n + order[c]]);
    Ok(EigenDecomp { values, vectors })
}

/// Smallest eigenvalue of `diag(blocks)`: the minimum over blocks of each
/// block's smallest eigenvalue.
pub fn min_eig_blockdiag(blocks: &[SymMatrix]) -> Result<f64, LinalgError> {
    if blocks.is_empty() {
        return Err(LinalgError::EmptyBlockList);
    }
    let mut min = f64::INFINITY;
    for b in blocks {
        let e = jacobi_eigh(b, 1e-12)?;
        min = min.min(e.values[0]);
    }
    Ok(min)
}

/// Smallest eigenpair of `G u = λ (H + ridge·I) u` for symmetric `G`, `H`.
///
/// The denominator matrix is reduced by its Cholesky factor `L L ᵀ`, which
/// turns the pencil into the standard symmetric problem
/// `L⁻¹ G L⁻ᵀ v = λ v` with `u = L⁻ᵀ v`; this preserves symmetry where
/// explicit inversion would not. The returned `u` has unit norm.
pub fn generalized_smallest(
    g: &SymMatrix,
    h: &SymMatrix,
    ridge: f64,
) -> Result<(f64, Vec<f64>), LinalgError> {
    let n = g.dim();
    if h.dim() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: h.dim(),
        });
    }
    let mut hr = h.clone();
    hr.add_diag(ridge);
    let l = cholesky_factor(&hr)?;

    // W = L⁻¹ G, column by column
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| g.get(i, j)).collect();
        for (i, v) in l.forward(&col).into_iter().enumerate() {
            w.set(i, j, v);
        }
    }
    // row j of C = L⁻¹ (row j of W), then symmetrize round-off
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let cj = l.forward(w.row(j));
        c.row_mut(j).copy_from_slice(&cj);
    }
    let c = SymMatrix::new(n, c.data().to_vec());

    let eig = jacobi_eigh(&c, 1e-12)?;
    let lambda = eig.values[0];
    let mut u = l.backward(&eig.vector(0));
    let nu = norm(&u);
    for x in &mut u {
        *x /= nu;
    }
    Ok((lambda, u))
}
