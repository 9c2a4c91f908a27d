//! Three per-class baselines, each solvable without a QP solver, all
//! generalized to K classes one-vs-rest:
//!
//! * **GEPSVM**: class y's augmented plane `u_y = (w_y, b_y)` minimizes the
//!   Rayleigh quotient `(‖E u‖² + (δ/2)‖u‖²) / ‖F u‖²` where `E` holds the
//!   class's own augmented rows and `F` everyone else's; solved as a
//!   generalized eigenproblem.
//! * **LSTSVM**: `u_y` solves the regularized normal equations
//!   `(λI + EᵀE + δ FᵀF) u = −δ Fᵀe`, i.e. own responses are driven to 0
//!   and the rest toward −1.
//! * **PCC**: `u_y` is the bottom eigenvector of `EᵀE − ν FᵀF`.
//!
//! Prediction picks the nearest plane; GEPSVM normalizes distances by
//! `‖w_y‖`, LSTSVM and PCC use the raw |response| (PCC's unit eigenvector
//! makes the two rules coincide for it).

use crate::dataset::{Dataset, Standardizer};
use crate::error::Error;
use crate::linalg::{
    cholesky_factor, dot, generalized_smallest, jacobi_eigh, norm, spd_solve, Matrix, SymMatrix,
};
use crate::nsvm_linear::augment;

/// Distance rule used by a plane model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceRule {
    /// `|g_y(x)| / ‖w_y‖`; falls back to |g| when `‖w_y‖ < 1e-12`.
    NormalizedByW,
    /// `|g_y(x)|`.
    Absolute,
}

/// One augmented hyperplane per class, in standardized feature space.
#[derive(Debug, Clone)]
pub struct PlaneModel {
    /// Per-class `(w_y, b_y)`, each of length n+1.
    pub planes: Vec<Vec<f64>>,
    pub rule: DistanceRule,
    pub standardizer: Standardizer,
}

impl PlaneModel {
    pub fn classes(&self) -> usize {
        self.planes.len()
    }

    pub fn features(&self) -> usize {
        self.planes[0].len() - 1
    }

    /// Per-class distances for one raw sample.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if x.len() != self.features() {
            return Err(Error::DimensionMismatch {
                expected: self.features(),
                found: x.len(),
            });
        }
        let xs = self.standardizer.apply_row(x);
        let n = xs.len();
        Ok(self
            .planes
            .iter()
            .map(|u| {
                let g = (dot(&u[..n], &xs) + u[n]).abs();
                match self.rule {
                    DistanceRule::Absolute => g,
                    DistanceRule::NormalizedByW => {
                        let wn = norm(&u[..n]);
                        if wn < 1e-12 {
                            g
                        } else {
                            g / wn
                        }
                    }
                }
            })
            .collect())
    }

    /// Nearest-plane labels (1-based); ties go to the smallest index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
        let mut out = Vec::with_capacity(x.rows());
        for i in 0..x.rows() {
            let dist = self.decision_values(x.row(i))?;
            let mut best = 0usize;
            for (j, v) in dist.iter().enumerate() {
                if *v < dist[best] {
                    best = j;
                }
            }
            out.push(best + 1);
        }
        Ok(out)
    }
}

/// Own-class and rest scatter matrices `EᵀE` and `FᵀF` for one class, from
/// the augmented standardized rows.
fn class_scatters(z: &Matrix, y: &[usize], class: usize) -> Result<(SymMatrix, SymMatrix), Error> {
    let d = z.cols();
    let mut own = SymMatrix::zeros(d);
    let mut rest = SymMatrix::zeros(d);
    let mut count = 0usize;
    for (i, &label) in y.iter().enumerate() {
        if label == class {
            own.add_scaled_outer(z.row(i), 1.0);
            count += 1;
        } else {
            rest.add_scaled_outer(z.row(i), 1.0);
        }
    }
    if count == 0 {
        return Err(Error::EmptyClass { class });
    }
    Ok((own, rest))
}

fn standardized_augmented(d: &Dataset) -> (Standardizer, Matrix) {
    let standardizer = Standardizer::fit(d.x());
    let z = augment(&standardizer.apply(d.x()));
    (standardizer, z)
}

/// GEPSVM: per class, the bottom generalized eigenvector of
/// `(EᵀE + (δ/2)I, FᵀF + εI)` with `ε = 1e-8·trace(FᵀF)/(n+1)` guarding a
/// singular denominator.
pub fn train_gepsvm(d: &Dataset, delta: f64) -> Result<PlaneModel, Error> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::BadParams("delta must be positive".into()));
    }
    let (standardizer, z) = standardized_augmented(d);
    let dim = z.cols();
    let mut planes = Vec::with_capacity(d.classes());
    for class in 1..=d.classes() {
        let (mut own, rest) = class_scatters(&z, d.y(), class)?;
        own.add_diag(delta / 2.0);
        let eps = 1e-8 * rest.trace() / dim as f64;
        let (_, u) = generalized_smallest(&own, &rest, eps)?;
        planes.push(u);
    }
    Ok(PlaneModel {
        planes,
        rule: DistanceRule::NormalizedByW,
        standardizer,
    })
}

/// LSTSVM: per class, solve `(λI + EᵀE + δFᵀF) u = −δFᵀe`. The matrix is
/// positive definite for λ > 0, so one Cholesky per class suffices.
pub fn train_lstsvm(d: &Dataset, lambda: f64, delta: f64) -> Result<PlaneModel, Error> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::BadParams("lambda must be positive".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::BadParams("delta must be nonnegative".into()));
    }
    let (standardizer, z) = standardized_augmented(d);
    let dim = z.cols();
    let mut planes = Vec::with_capacity(d.classes());
    for class in 1..=d.classes() {
        let (own, rest) = class_scatters(&z, d.y(), class)?;
        let mut lhs = SymMatrix::from_fn(dim, |i, j| own.get(i, j) + delta * rest.get(i, j));
        lhs.add_diag(lambda);
        // rhs = −δ Fᵀe, accumulated over the rest rows
        let mut rhs = vec![0.0; dim];
        for (i, &label) in d.y().iter().enumerate() {
            if label != class {
                for (slot, v) in rhs.iter_mut().zip(z.row(i)) {
                    *slot -= delta * v;
                }
            }
        }
        let factor = cholesky_factor(&lhs)?;
        let u = spd_solve(&factor, &rhs)?;
        planes.push(u);
    }
    Ok(PlaneModel {
        planes,
        rule: DistanceRule::Absolute,
        standardizer,
    })
}

/// PCC: per class, the unit bottom eigenvector of `EᵀE − ν FᵀF`.
pub fn train_pcc(d: &Dataset, nu: f64) -> Result<PlaneModel, Error> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::BadParams("nu must be nonnegative".into()));
    }
    let (standardizer, z) = standardized_augmented(d);
    let dim = z.cols();
    let mut planes = Vec::with_capacity(d.classes());
    for class in 1..=d.classes() {
        let (own, rest) = class_scatters(&z, d.y(), class)?;
        let m = SymMatrix::from_fn(dim, |i, j| own.get(i, j) - nu * rest.get(i, j));
        let eig = jacobi_eigh(&m, 1e-12)?;
        planes.push(eig.vector(0));
    }
    Ok(PlaneModel {
        planes,
        rule: DistanceRule::Absolute,
        standardizer,
    })
}
