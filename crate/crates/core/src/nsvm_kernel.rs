//! The kernel max-min distance NSVM: each kernel-space hyperplane
//! `(v_y, d_y)` is written as a combination of the mapped training samples,
//! `(v_y; d_y) = (φ(X); eᵀ) α_y`, which turns the problem into a finite one
//! over the stacked dual coefficients `α ∈ R^{mK}` with exactly the same
//! DC structure as the linear model: the per-sample feature row becomes
//! `ψ_i = K(x_i, X)ᵀ + e`, and the same proximal iteration runs on it.

use crate::dataset::{Dataset, Standardizer};
use crate::error::Error;
use crate::kernel::KernelSpec;
use crate::linalg::{dot, min_eig_blockdiag, Matrix, SymMatrix};
use crate::mpdca::{self, InitKind, NsvmConfig, SolverTrace, StackedWeights};
use crate::nsvm_linear::DEGENERATE_NORM;

/// Default Gram ridge: `1e-10 ×` the mean Gram diagonal. The kernel blocks
/// can be singular for rank-deficient Gram matrices (duplicate samples, for
/// one), and this restores positive definiteness without perceptibly moving
/// solutions.
pub fn default_gram_ridge(gram: &SymMatrix) -> f64 {
    1e-10 * gram.trace() / gram.dim() as f64
}

/// Per-sample dual feature rows: `ψ_i = K(x_i, X)ᵀ + e`, stacked as an
/// m×m matrix.
pub fn psi_rows(gram: &SymMatrix) -> Matrix {
    let m = gram.dim();
    Matrix::from_fn(m, m, |i, j| gram.get(i, j) + 1.0)
}

/// The K kernel-space G blocks, each m×m:
/// `G_y = ½·K(X,X) + (C₁+C₂) Σ_{y_i=y} ψ_i ψ_iᵀ + ridge·I`.
pub fn assemble_g_kernel(
    d: &Dataset,
    kernel: KernelSpec,
    c1: f64,
    c2: f64,
    ridge: f64,
) -> Result<Vec<SymMatrix>, Error> {
    let gram = kernel.gram(d.x());
    assemble_g_kernel_from_gram(&gram, d.y(), d.classes(), c1, c2, ridge)
}

/// Same assembly from a precomputed Gram matrix.
pub fn assemble_g_kernel_from_gram(
    gram: &SymMatrix,
    y: &[usize],
    classes: usize,
    c1: f64,
    c2: f64,
    ridge: f64,
) -> Result<Vec<SymMatrix>, Error> {
    let m = gram.dim();
    let psis = psi_rows(gram);
    let mut counts = vec![0usize; classes];
    let mut blocks = vec![SymMatrix::from_fn(m, |i, j| 0.5 * gram.get(i, j)); classes];
    for (i, &label) in y.iter().enumerate() {
        blocks[label - 1].add_scaled_outer(psis.row(i), c1 + c2);
        counts[label - 1] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyClass { class: empty + 1 });
    }
    for b in &mut blocks {
        b.add_diag(ridge);
    }
    Ok(blocks)
}

/// The α-space model objective:
/// `½ Σ_y α_yᵀKα_y + C₁ Σ_i (ψ_iᵀα_{y_i})² + C₂ Σ_i max-min loss`,
/// where the loss compares squared ψ responses across blocks.
pub fn kernel_objective(
    alpha: &StackedWeights,
    gram: &SymMatrix,
    psis: &Matrix,
    y: &[usize],
    c1: f64,
    c2: f64,
) -> Result<f64, Error> {
    if alpha.block_dim() != gram.dim() {
        return Err(Error::DimensionMismatch {
            expected: gram.dim(),
            found: alpha.block_dim(),
        });
    }
    let k = alpha.blocks();
    let mut total = 0.0;
    for b in 0..k {
        total += 0.5 * gram.quad_form(alpha.block(b));
    }
    for (i, &label) in y.iter().enumerate() {
        let own = dot(psis.row(i), alpha.block(label - 1)).powi(2);
        total += c1 * own;
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if j != label - 1 {
                let other = dot(psis.row(i), alpha.block(j)).powi(2);
                worst = worst.max(own - other);
            }
        }
        total += c2 * worst;
    }
    Ok(total)
}

/// Which denominator the kernel decision rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelRule {
    /// `|α_yᵀψ(x)| / √(α_yᵀKα_y)`: the norm of the kernel-space weight
    /// vector is `√(α_yᵀKα_y)`, mirroring the linear rule's `‖w_y‖`.
    #[default]
    NormConsistent,
    /// `|α_yᵀψ(x)| / (α_yᵀ[K + eeᵀ]α_y)`: no square root, bias included.
    Literal,
}

/// A trained kernel NSVM: stacked dual coefficients plus the standardized
/// training matrix the representer expansion needs at prediction time.
#[derive(Debug, Clone)]
pub struct KernelNsvmModel {
    pub alpha: StackedWeights,
    /// Training features after standardization (what the kernel sees).
    pub train_x: Matrix,
    pub kernel: KernelSpec,
    pub gram_diag_reg: f64,
    pub standardizer: Standardizer,
    pub degenerate: Vec<bool>,
    pub rule: KernelRule,
    /// Cached `α_yᵀKα_y` per class (kernel-space squared weight norms).
    norm_sq: Vec<f64>,
    /// Cached `Σ_i α_y[i]` per class (bias of each kernel hyperplane).
    alpha_sum: Vec<f64>,
}

impl KernelNsvmModel {
    /// Assemble from parts, recomputing the cached per-class norms from the
    /// training Gram matrix (deterministic, so save/load round-trips
    /// reproduce predictions bit-exactly).
    pub fn from_parts(
        alpha: StackedWeights,
        train_x: Matrix,
        kernel: KernelSpec,
        gram_diag_reg: f64,
        standardizer: Standardizer,
        rule: KernelRule,
    ) -> Self {
        let gram = kernel.gram(&train_x);
        let k = alpha.blocks();
        let norm_sq: Vec<f64> = (0..k)
            .map(|b| gram.quad_form(alpha.block(b)).max(0.0))
            .collect();
        let alpha_sum: Vec<f64> = (0..k).map(|b| alpha.block(b).iter().sum()).collect();
        let degenerate = norm_sq
            .iter()
            .map(|&n| n.sqrt() < DEGENERATE_NORM)
            .collect();
        KernelNsvmModel {
            alpha,
            train_x,
            kernel,
            gram_diag_reg,
            standardizer,
            degenerate,
            rule,
            norm_sq,
            alpha_sum,
        }
    }

    pub fn classes(&self) -> usize {
        self.alpha.blocks()
    }

    pub fn features(&self) -> usize {
        self.train_x.cols()
    }

    /// Per-class decision distances for one raw sample.
    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>, Error> {
        if x.len() != self.features() {
            return Err(Error::DimensionMismatch {
                expected: self.features(),
                found: x.len(),
            });
        }
        let xs = self.standardizer.apply_row(x);
        let m = self.train_x.rows();
        let mut psi = Vec::with_capacity(m);
        for i in 0..m {
            psi.push(self.kernel.eval(&xs, self.train_x.row(i))? + 1.0);
        }
        Ok((0..self.classes())
            .map(|b| {
                let resp = dot(alpha_block(&self.alpha, b), &psi).abs();
                if self.degenerate[b] {
                    return resp;
                }
                match self.rule {
                    KernelRule::NormConsistent => resp / self.norm_sq[b].sqrt(),
                    KernelRule::Literal => {
                        resp / (self.norm_sq[b] + self.alpha_sum[b] * self.alpha_sum[b])
                    }
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

fn alpha_block(alpha: &StackedWeights, b: usize) -> &[f64] {
    alpha.block(b)
}

/// Train the kernel NSVM: standardize, build the Gram and ψ rows, assemble
/// the ridged kernel blocks, and run the same proximal DC iteration as the
/// linear model over the stacked α.
pub fn train_kernel(
    d: &Dataset,
    kernel: KernelSpec,
    cfg: &NsvmConfig,
) -> Result<(KernelNsvmModel, SolverTrace), Error> {
    cfg.validate()?;
    if let KernelSpec::Rbf { sigma } = kernel {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::BadConfig("RBF sigma must be positive".into()));
        }
    }
    let standardizer = Standardizer::fit(d.x());
    let xs = standardizer.apply(d.x());
    let gram = kernel.gram(&xs);
    let ridge = default_gram_ridge(&gram);
    let blocks = assemble_g_kernel_from_gram(&gram, d.y(), d.classes(), cfg.c1, cfg.c2, ridge)?;
    let psis = psi_rows(&gram);
    let lambda_min = min_eig_blockdiag(&blocks)?.max(0.0);
    let k = d.classes();
    let m = d.samples();
    let a0 = match cfg.init {
        InitKind::Random => mpdca::random_init(k, m, cfg.seed),
        InitKind::ClassPlanes => {
            // metric ‖v_y‖² + d_y² = αᵀ(K + eeᵀ)α keeps the start out of
            // the Gram null space
            let metric = SymMatrix::from_fn(m, |i, j| gram.get(i, j) + 1.0);
            mpdca::class_planes_init_with_metric(&psis, d.y(), k, Some(&metric))?
        }
    };
    let outcome = mpdca::solve(&blocks, &psis, cfg, lambda_min, a0)?;
    let model = KernelNsvmModel::from_parts(
        outcome.weights,
        xs,
        kernel,
        ridge,
        standardizer,
        KernelRule::default(),
    );
    Ok((model, outcome.trace))
}
