//! The linear max-min distance NSVM: all K hyperplanes are fit jointly by
//! minimizing
//!
//! ```text
//!   ½ Σ_y ‖w_y‖²  +  C₁ Σ_i g_{y_i}(x_i)²  +  C₂ Σ_i ℓ(x_i, y_i)
//! ```
//!
//! where `g_y(x) = w_yᵀx + b_y` and `ℓ` is the max-min squared-distance
//! loss: a sample is penalized when its squared response on its own
//! hyperplane exceeds its smallest squared response on the other
//! hyperplanes. The objective equals `w̄ᵀGw̄ − w̄ᵀH(w̄)w̄` over the stacked
//! augmented weights, which is what the shared solver iterates on.
//!
//! Prediction assigns the class whose hyperplane is nearest:
//! `argmin_y |g_y(x)| / ‖w_y‖`, with ties to the smallest index.

use crate::dataset::{Dataset, Standardizer};
use crate::error::Error;
use crate::linalg::{dot, min_eig_blockdiag, norm, Matrix, SymMatrix};
use crate::mpdca::{self, InitKind, NsvmConfig, SolverTrace, StackedWeights};

/// Below this weight norm a class hyperplane is flagged degenerate and its
/// distance falls back to the unnormalized |response|.
pub const DEGENERATE_NORM: f64 = 1e-8;

/// Append a constant-1 bias column: row i becomes `z_i = (x_i, 1)`.
pub fn augment(x: &Matrix) -> Matrix {
    let n = x.cols();
    Matrix::from_fn(
        x.rows(),
        n + 1,
        |i, j| if j < n { x.get(i, j) } else { 1.0 },
    )
}

/// The K diagonal blocks of G, each `(n+1)×(n+1)`:
/// `G_y = ½·diag(I_n, 0) + (C₁+C₂) Σ_{y_i=y} z_i z_iᵀ`.
/// Every block is positive definite as long as its class is nonempty.
pub fn assemble_g(d: &Dataset, c1: f64, c2: f64) -> Result<Vec<SymMatrix>, Error> {
    let n = d.features();
    let k = d.classes();
    let mut counts = vec![0usize; k];
    let mut blocks = vec![SymMatrix::zeros(n + 1); k];
    for b in blocks.iter_mut() {
        for j in 0..n {
            let mut e = vec![0.0; n + 1];
            e[j] = 1.0;
            b.add_scaled_outer(&e, 0.5);
        }
    }
    let z = augment(d.x());
    for (i, &label) in d.y().iter().enumerate() {
        blocks[label - 1].add_scaled_outer(z.row(i), c1 + c2);
        counts[label - 1] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class: empty + 1 });
    }
    Ok(blocks)
}

fn response(block: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    dot(&block[..n], x) + block[n]
}

/// The max-min squared-distance loss of one sample:
/// `max_{j≠y} max{ g_y(x)² − g_j(x)², 0 }`.
pub fn maxmin_loss(w: &StackedWeights, x: &[f64], y: usize) -> Result<f64, Error> {
    let k = w.blocks();
    if y < 1 || y > k {
        return Err(Error::BadLabel {
            label: y,
            classes: k,
        });
    }
    if x.len() + 1 != w.block_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.block_dim() - 1,
            found: x.len(),
        });
    }
    let own = response(w.block(y - 1), x).powi(2);
    let mut worst: f64 = 0.0;
    for j in 0..k {
        if j == y - 1 {
            continue;
        }
        let other = response(w.block(j), x).powi(2);
        worst = worst.max(own - other);
    }
    Ok(worst)
}

/// Full model objective on a dataset. Always nonnegative, and zero only at
/// the all-zero weights.
pub fn nsvm_objective(w: &StackedWeights, d: &Dataset, c1: f64, c2: f64) -> Result<f64, Error> {
    if w.blocks() != d.classes() {
        return Err(Error::DimensionMismatch {
            expected: d.classes(),
            found: w.blocks(),
        });
    }
    if w.block_dim() != d.features() + 1 {
        return Err(Error::DimensionMismatch {
            expected: d.features() + 1,
            found: w.block_dim(),
        });
    }
    let n = d.features();
    let mut total = 0.0;
    for b in 0..w.blocks() {
        let wy = &w.block(b)[..n];
        total += 0.5 * dot(wy, wy);
    }
    for (i, &label) in d.y().iter().enumerate() {
        let x = d.x().row(i);
        total += c1 * response(w.block(label - 1), x).powi(2);
        total += c2 * maxmin_loss(w, x, label)?;
    }
    Ok(total)
}

/// A trained linear NSVM: stacked augmented hyperplanes in standardized
/// feature space, plus the standardizer itself.
#[derive(Debug, Clone)]
pub struct LinearNsvmModel {
    pub weights: StackedWeights,
    pub standardizer: Standardizer,
    pub degenerate: Vec<bool>,
}

impl LinearNsvmModel {
    pub fn classes(&self) -> usize {
        self.weights.blocks()
    }

    pub fn features(&self) -> usize {
        self.weights.block_dim() - 1
    }

    /// Per-class distances `|g_y(x)| / ‖w_y‖` for one raw sample
    /// (degenerate classes use the unnormalized |response|).
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if x.len() != self.features() {
            return Err(Error::DimensionMismatch {
                expected: self.features(),
                found: x.len(),
            });
        }
        let xs = self.standardizer.apply_row(x);
        let n = xs.len();
        Ok((0..self.classes())
            .map(|b| {
                let block = self.weights.block(b);
                let g = response(block, &xs).abs();
                if self.degenerate[b] {
                    g
                } else {
                    g / norm(&block[..n])
                }
            })
            .collect())
    }

    /// Nearest-hyperplane labels (1-based) for a raw feature matrix.
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

/// Train on a dataset: fit the standardizer, assemble the G blocks on the
/// standardized features, and run the proximal DC iteration.
pub fn train_linear(
    d: &Dataset,
    cfg: &NsvmConfig,
) -> Result<(LinearNsvmModel, SolverTrace), Error> {
    cfg.validate()?;
    let standardizer = Standardizer::fit(d.x());
    let xs = standardizer.apply(d.x());
    let ds = Dataset::from_parts(xs, d.y().to_vec(), d.label_names().to_vec())?;
    let g_blocks = assemble_g(&ds, cfg.c1, cfg.c2)?;
    let phis = augment(ds.x());
    let lambda_min = min_eig_blockdiag(&g_blocks)?.max(0.0);
    let k = d.classes();
    let w0 = match cfg.init {
        InitKind::Random => mpdca::random_init(k, phis.cols(), cfg.seed),
        InitKind::ClassPlanes => mpdca::class_planes_init(&phis, ds.y(), k)?,
    };
    let outcome = mpdca::solve(&g_blocks, &phis, cfg, lambda_min, w0)?;
    let n = d.features();
    let degenerate = (0..k)
        .map(|b| norm(&outcome.weights.block(b)[..n]) < DEGENERATE_NORM)
        .collect();
    Ok((
        LinearNsvmModel {
            weights: outcome.weights,
            standardizer,
            degenerate,
        },
        outcome.trace,
    ))
}
