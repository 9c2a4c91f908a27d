//! The shared proximal difference-of-convex iteration with extrapolation
//! behind both NSVM trainers.
//!
//! Both the linear and the kernel model reduce to
//!
//! ```text
//!     min_w  wᵀ G w − wᵀ H(w) w
//! ```
//!
//! over K stacked blocks, where `G = diag(G_y)` is positive definite and
//! `H(w)` collects one rank-1 term per sample, placed in the block with the
//! smallest squared response on that sample (the *active set*). Each
//! iteration re-selects the active set, linearizes the concave part at an
//! extrapolated point `uᵗ = wᵗ + βₜ(wᵗ − wᵗ⁻¹)`, and solves the strongly
//! convex quadratic subproblem
//!
//! ```text
//!     f_t(w) = wᵀGw + (L/2)‖w − uᵗ‖² − wᵀξᵗ,    ξᵗ = 2Hᵗwᵗ
//! ```
//!
//! in closed form: `(2G + L·I) w = L·uᵗ + ξᵗ`, block by block. βₜ follows
//! a FISTA-style θ recursion, capped at `√(2λ_min/(2λ_min+L))` and restarted
//! every `restart_period` iterations.
//!
//! Two unconditional contracts are enforced on every iteration and abort
//! the solve with a `NumericalFailure` when violated:
//!
//! * re-selecting the active set never increases the H quadratic form at
//!   the current iterate (absolute slack 1e-10);
//! * the subproblem solve is stationary to 1e-8 relative residual.
//!
//! The quantity `D_t = h_{t-1}(wᵗ) + (L/2)‖wᵗ − wᵗ⁻¹‖²` is recorded every
//! iteration. Whenever the active set does not change, `D_t` provably
//! cannot increase, and the solver enforces that hard; across an active-set
//! change it can tick up by at most the re-selection gap, and descent then
//! holds only when the proximal weight L dominates that gap (a run-dependent
//! condition that cannot be checked a priori). [`DescentPolicy::Enforce`]
//! turns any increase at all into a hard failure, making the run a witness
//! that the stronger condition held.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Error;
use crate::linalg::{cholesky_factor, dot, norm, CholFactor, Matrix, SymMatrix};

const DESCENT_SLACK: f64 = 1e-10;
const H_MONOTONE_SLACK: f64 = 1e-10;
const STATIONARITY_TOL: f64 = 1e-8;

/// Which closed form the subproblem solve uses.
///
/// `StationaryExact` solves `(2G + L·I) w = L·uᵗ + ξᵗ`, the stationarity
/// system of `f_t`; the descent argument relies on `wᵗ⁺¹` being the exact
/// minimizer. `Doubled` solves `(G + (L/2)·I) w = L·uᵗ + ξᵗ` instead, which
/// returns twice the minimizer; it is kept for comparison only and is
/// exempt from the descent and stationarity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    #[default]
    StationaryExact,
    Doubled,
}

/// Solver configuration shared by the linear and kernel NSVM.
#[derive(Debug, Clone)]
pub struct NsvmConfig {
    /// Weight of the own-class squared responses.
    pub c1: f64,
    /// Weight of the max-min loss term.
    pub c2: f64,
    /// Proximal parameter. Any positive value works; larger is more damped.
    pub l: f64,
    pub max_iter: usize,
    /// Stop once `‖wᵗ⁺¹ − wᵗ‖ / max(1, ‖wᵗ‖)` falls to this.
    pub tol: f64,
    /// θ recursion restart period for the extrapolation schedule.
    pub restart_period: usize,
    /// Seed for the uniform(-0.5, 0.5) initial iterate under
    /// [`InitKind::Random`].
    pub seed: u64,
    pub update_rule: UpdateRule,
    pub init: InitKind,
    pub descent_policy: DescentPolicy,
}

/// How trainers choose the initial iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitKind {
    /// Per-class proximal-plane directions; see [`class_planes_init`].
    #[default]
    ClassPlanes,
    /// Seeded `uniform(-0.5, 0.5)` coordinates; see [`random_init`].
    Random,
}

/// What to do when `D_t` increases across an active-set change.
///
/// Increases on iterations with an unchanged active set are always hard
/// failures; they cannot happen with an exact subproblem solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DescentPolicy {
    /// Record the trace and keep going. The increase is still bounded by
    /// the recorded `h_gap`, which is checked.
    #[default]
    Record,
    /// Abort with `NumericalFailure`. A completed run certifies that the
    /// descent quantity was nonincreasing throughout.
    Enforce,
}

impl Default for NsvmConfig {
    fn default() -> Self {
        NsvmConfig {
            c1: 1.0,
            c2: 1.0,
            l: 1.0,
            max_iter: 50,
            tol: 1e-6,
            restart_period: 50,
            seed: 0,
            update_rule: UpdateRule::StationaryExact,
            init: InitKind::default(),
            descent_policy: DescentPolicy::default(),
        }
    }
}

impl NsvmConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.c1 > 0.0 && self.c1.is_finite()) {
            return Err(Error::BadConfig("c1 must be positive".into()));
        }
        if !(self.c2 > 0.0 && self.c2.is_finite()) {
            return Err(Error::BadConfig("c2 must be positive".into()));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::BadConfig("L must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::BadConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::BadConfig("tol must be positive".into()));
        }
        if self.restart_period == 0 {
            return Err(Error::BadConfig("restart period must be at least 1".into()));
        }
        Ok(())
    }
}

/// K equal-length coefficient blocks concatenated into one vector: the
/// per-class augmented hyperplanes `(w_y, b_y)` for the linear model, the
/// per-class dual coefficients `α_y` for the kernel model.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedWeights {
    blocks: usize,
    block_dim: usize,
    data: Vec<f64>,
}

impl StackedWeights {
    pub fn zeros(blocks: usize, block_dim: usize) -> Self {
        StackedWeights {
            blocks,
            block_dim,
            data: vec![0.0; blocks * block_dim],
        }
    }

    pub fn from_vec(blocks: usize, block_dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), blocks * block_dim);
        StackedWeights {
            blocks,
            block_dim,
            data,
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Coefficients of zero-based block `b` (class `b + 1`).
    #[inline]
    pub fn block(&self, b: usize) -> &[f64] {
        &self.data[b * self.block_dim..(b + 1) * self.block_dim]
    }

    pub fn block_mut(&mut self, b: usize) -> &mut [f64] {
        &mut self.data[b * self.block_dim..(b + 1) * self.block_dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    fn dist(&self, other: &StackedWeights) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// One record per iteration. `objective` and `descent` are evaluated at the
/// iterate the step started from; `stationarity` is the relative residual of
/// the solve performed during the iteration.
#[derive(Debug, Clone, Copy)]
pub struct TraceEntry {
    /// Model objective `wᵀGw − wᵀH(w)w` at `wᵗ`.
    pub objective: f64,
    /// `D_t = h_{t-1}(wᵗ) + (L/2)‖wᵗ − wᵗ⁻¹‖²`.
    pub descent: f64,
    /// `‖wᵗ − wᵗ⁻¹‖`.
    pub step_norm: f64,
    pub beta: f64,
    /// `‖(2G + L·I)wᵗ⁺¹ − (L·uᵗ + ξᵗ)‖ / (1 + ‖L·uᵗ + ξᵗ‖)`.
    pub stationarity: f64,
    /// `(wᵗ)ᵀH^{t-1}wᵗ − (wᵗ)ᵀHᵗwᵗ`; never meaningfully negative.
    pub h_gap: f64,
}

/// Per-iteration history of a solver run.
#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub entries: Vec<TraceEntry>,
    /// `‖wᵗ⁺¹ − wᵗ‖` of the last step taken (not part of any entry: each
    /// entry records the step that led *into* its iterate).
    pub final_step_norm: f64,
    /// The last step relative to `max(1, ‖wᵗ‖)`.
    pub final_rel_step: f64,
    /// Whether the relative step fell below `tol` within `max_iter`.
    pub converged: bool,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Result of a solver run.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub weights: StackedWeights,
    pub trace: SolverTrace,
}

/// Extrapolation cap `√(2λ_min / (2λ_min + L))`, or 0 when `λ_min ≤ 0`
/// (plain unaccelerated iteration, which the descent argument always admits).
pub fn extrapolation_cap(lambda_min: f64, l: f64) -> f64 {
    if lambda_min > 0.0 {
        (2.0 * lambda_min / (2.0 * lambda_min + l)).sqrt()
    } else {
        0.0
    }
}

/// FISTA-style βₜ schedule: starting from `θ₀ = θ₁ = 1`,
/// `βₜ = min{(θₜ₋₁ − 1)/θₜ, cap}` with `θₜ₊₁ = (1 + √(1 + 4θₜ²))/2`,
/// and the θ pair resets to (1, 1) every `restart_period` calls.
#[derive(Debug, Clone)]
pub struct BetaSchedule {
    theta_prev: f64,
    theta_curr: f64,
    cap: f64,
    restart_period: usize,
    since_restart: usize,
}

impl BetaSchedule {
    pub fn new(lambda_min: f64, l: f64, restart_period: usize) -> Self {
        assert!(restart_period >= 1);
        BetaSchedule {
            theta_prev: 1.0,
            theta_curr: 1.0,
            cap: extrapolation_cap(lambda_min, l),
            restart_period,
            since_restart: 0,
        }
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// βₜ for the next iteration; advances the θ recursion.
    pub fn next_beta(&mut self) -> f64 {
        let beta = ((self.theta_prev - 1.0) / self.theta_curr).min(self.cap);
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * self.theta_curr * self.theta_curr).sqrt());
        self.theta_prev = self.theta_curr;
        self.theta_curr = theta_next;
        self.since_restart += 1;
        if self.since_restart >= self.restart_period {
            self.theta_prev = 1.0;
            self.theta_curr = 1.0;
            self.since_restart = 0;
        }
        beta
    }
}

/// Per-sample active assignment: the 1-based index of the block with the
/// smallest squared response `(φᵢᵀw_j)²`; ties take the smallest index.
pub fn active_set(phis: &Matrix, w: &StackedWeights) -> Vec<usize> {
    let mut out = Vec::with_capacity(phis.rows());
    for i in 0..phis.rows() {
        let row = phis.row(i);
        let mut best = 0usize;
        let mut best_val = f64::INFINITY;
        for b in 0..w.blocks() {
            let r = dot(row, w.block(b));
            let v = r * r;
            if v < best_val {
                best_val = v;
                best = b;
            }
        }
        out.push(best + 1);
    }
    out
}

/// `wᵀGw` over the diagonal blocks.
pub fn quad_form_g(g_blocks: &[SymMatrix], w: &StackedWeights) -> f64 {
    g_blocks
        .iter()
        .enumerate()
        .map(|(b, g)| g.quad_form(w.block(b)))
        .sum()
}

/// `wᵀH w` for the H induced by an active assignment:
/// `C₂ Σᵢ (φᵢᵀ w_{jᵢ})²`.
pub fn quad_form_h(phis: &Matrix, active: &[usize], w: &StackedWeights, c2: f64) -> f64 {
    let mut s = 0.0;
    for (i, &j) in active.iter().enumerate() {
        let r = dot(phis.row(i), w.block(j - 1));
        s += r * r;
    }
    c2 * s
}

/// Model objective `wᵀGw − wᵀH(w)w` with the active set taken at `w` itself.
pub fn objective(g_blocks: &[SymMatrix], phis: &Matrix, w: &StackedWeights, c2: f64) -> f64 {
    let active = active_set(phis, w);
    quad_form_g(g_blocks, w) - quad_form_h(phis, &active, w, c2)
}

/// `ξ = 2Hw`, accumulated per sample into its active block without ever
/// materializing H: block `jᵢ` gains `2·C₂·φᵢ·(φᵢᵀ w_{jᵢ})`.
pub fn accumulate_xi(
    phis: &Matrix,
    active: &[usize],
    w: &StackedWeights,
    c2: f64,
) -> StackedWeights {
    let mut xi = StackedWeights::zeros(w.blocks(), w.block_dim());
    for (i, &j) in active.iter().enumerate() {
        let row = phis.row(i);
        let r = dot(row, w.block(j - 1));
        let scale = 2.0 * c2 * r;
        for (slot, v) in xi.block_mut(j - 1).iter_mut().zip(row) {
            *slot += scale * v;
        }
    }
    xi
}

fn solve_blocks(
    factors: &[CholFactor],
    rhs: &StackedWeights,
    rule: UpdateRule,
) -> Result<StackedWeights, Error> {
    // factors hold G_y + (L/2)·I, so the stationarity system
    // (2G_y + L·I) w = rhs solves as half the factor solve
    let mut w = StackedWeights::zeros(rhs.blocks(), rhs.block_dim());
    let half = match rule {
        UpdateRule::StationaryExact => 0.5,
        UpdateRule::Doubled => 1.0,
    };
    for (b, factor) in factors.iter().enumerate() {
        let x = crate::linalg::spd_solve(factor, rhs.block(b))
            .map_err(|e| Error::NumericalFailure(format!("block solve failed: {e}")))?;
        for (slot, v) in w.block_mut(b).iter_mut().zip(x) {
            *slot = half * v;
        }
    }
    Ok(w)
}

fn stationarity_residual(
    g_blocks: &[SymMatrix],
    l: f64,
    w_next: &StackedWeights,
    rhs: &StackedWeights,
) -> f64 {
    let mut res_sq = 0.0;
    let mut rhs_sq = 0.0;
    for (b, g) in g_blocks.iter().enumerate() {
        let gw = g.matvec(w_next.block(b));
        for ((gwi, &wi), &ri) in gw.iter().zip(w_next.block(b)).zip(rhs.block(b)) {
            let r = 2.0 * gwi + l * wi - ri;
            res_sq += r * r;
            rhs_sq += ri * ri;
        }
    }
    res_sq.sqrt() / (1.0 + rhs_sq.sqrt())
}

/// One exact subproblem solve: builds `ξᵗ = 2Hᵗwᵗ` from the active
/// assignment, then returns the minimizer of
/// `f_t(w) = wᵀGw + (L/2)‖w − u‖² − wᵀξᵗ`.
pub fn dca_step(
    g_blocks: &[SymMatrix],
    phis: &Matrix,
    active: &[usize],
    w: &StackedWeights,
    u: &StackedWeights,
    c2: f64,
    l: f64,
) -> Result<StackedWeights, Error> {
    let factors = factor_blocks(g_blocks, l)?;
    let xi = accumulate_xi(phis, active, w, c2);
    let rhs = combine_rhs(u, &xi, l);
    let w_next = solve_blocks(&factors, &rhs, UpdateRule::StationaryExact)?;
    let res = stationarity_residual(g_blocks, l, &w_next, &rhs);
    if res > STATIONARITY_TOL {
        return Err(Error::NumericalFailure(format!(
            "subproblem stationarity residual {res:.3e}"
        )));
    }
    Ok(w_next)
}

fn factor_blocks(g_blocks: &[SymMatrix], l: f64) -> Result<Vec<CholFactor>, Error> {
    g_blocks
        .iter()
        .map(|g| {
            let mut m = g.clone();
            m.add_diag(l / 2.0);
            cholesky_factor(&m)
                .map_err(|e| Error::NumericalFailure(format!("block factorization failed: {e}")))
        })
        .collect()
}

fn combine_rhs(u: &StackedWeights, xi: &StackedWeights, l: f64) -> StackedWeights {
    let data = u
        .as_slice()
        .iter()
        .zip(xi.as_slice())
        .map(|(ui, xii)| l * ui + xii)
        .collect();
    StackedWeights::from_vec(u.blocks(), u.block_dim(), data)
}

/// Seeded random start: `uniform(-0.5, 0.5)` per coordinate. The zero
/// vector is the degenerate global minimizer, so a non-tiny start is
/// required.
pub fn random_init(blocks: usize, block_dim: usize, seed: u64) -> StackedWeights {
    let mut rng = StdRng::seed_from_u64(seed);
    let data: Vec<f64> = (0..blocks * block_dim)
        .map(|_| rng.random_range(-0.5..0.5))
        .collect();
    StackedWeights::from_vec(blocks, block_dim, data)
}

/// Deterministic warm start: block `y` is the direction of smallest
/// scatter of class `y`'s own feature rows, i.e. the class's proximal
/// plane. Each sample then starts with a near-zero response on its own
/// block, so the initial active assignment is close to self-consistent and
/// the early iterations avoid the violent reassignment churn a random start
/// produces.
pub fn class_planes_init(
    phis: &Matrix,
    labels: &[usize],
    blocks: usize,
) -> Result<StackedWeights, Error> {
    class_planes_init_with_metric(phis, labels, blocks, None)
}

/// [`class_planes_init`] with the scatter quotient measured against a
/// supplied metric: block `y` minimizes `Σ_{y_i=y} (φᵢᵀα)²` relative to
/// `αᵀMα`. The kernel trainer passes `M = K + eeᵀ` (the squared norm of the
/// induced kernel-space hyperplane) so the start does not drift into the
/// Gram null space, where every response is zero and the iteration has a
/// useless fixed point. `None` means the identity metric.
///
/// Solved per class by generalized inverse iteration on the ridged scatter:
/// one Cholesky factorization and a fixed number of solves, which stays
/// cheap when blocks are m×m.
pub fn class_planes_init_with_metric(
    phis: &Matrix,
    labels: &[usize],
    blocks: usize,
    metric: Option<&SymMatrix>,
) -> Result<StackedWeights, Error> {
    let d = phis.cols();
    if let Some(m) = metric {
        if m.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: m.dim(),
            });
        }
    }
    let mut w0 = StackedWeights::zeros(blocks, d);
    for b in 0..blocks {
        let mut scatter = SymMatrix::zeros(d);
        let mut count = 0usize;
        for (i, &label) in labels.iter().enumerate() {
            if label == b + 1 {
                scatter.add_scaled_outer(phis.row(i), 1.0);
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::EmptyClass { class: b + 1 });
        }
        // shift by a small multiple of the metric so the factorization
        // exists and null directions of the metric are excluded
        let scale = (scatter.trace() / d as f64).max(1e-300);
        match metric {
            None => scatter.add_diag(1e-8 * scale),
            Some(m) => {
                let mscale = (m.trace() / d as f64).max(1e-300);
                let shift = 1e-8 * scale / mscale;
                let mut shifted =
                    SymMatrix::from_fn(d, |i, j| scatter.get(i, j) + shift * m.get(i, j));
                shifted.add_diag(1e-12 * scale);
                scatter = shifted;
            }
        }
        let factor = cholesky_factor(&scatter)
            .map_err(|e| Error::NumericalFailure(format!("init scatter factorization: {e}")))?;
        let mut v = vec![1.0 / (d as f64).sqrt(); d];
        for _ in 0..50 {
            let rhs = match metric {
                None => v.clone(),
                Some(m) => m.matvec(&v),
            };
            let next = factor.backward(&factor.forward(&rhs));
            let n = norm(&next);
            if !n.is_finite() || n == 0.0 {
                break;
            }
            v = next.iter().map(|x| x / n).collect();
        }
        w0.block_mut(b).copy_from_slice(&v);
    }
    Ok(w0)
}

/// Run the full iteration from the given start; `w¹ = w⁰`.
pub fn solve(
    g_blocks: &[SymMatrix],
    phis: &Matrix,
    cfg: &NsvmConfig,
    lambda_min: f64,
    w0: StackedWeights,
) -> Result<SolveOutcome, Error> {
    cfg.validate()?;
    let k = g_blocks.len();
    assert!(k >= 1, "at least one block");
    let d = g_blocks[0].dim();
    if g_blocks.iter().any(|g| g.dim() != d) {
        return Err(Error::BadConfig("blocks must share one dimension".into()));
    }
    if phis.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phis.cols(),
        });
    }
    if w0.blocks() != k || w0.block_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: k * d,
            found: w0.blocks() * w0.block_dim(),
        });
    }
    let exact = cfg.update_rule == UpdateRule::StationaryExact;
    let factors = factor_blocks(g_blocks, cfg.l)?;

    let mut w = w0;
    let mut w_prev = w.clone();
    let mut active_prev = active_set(phis, &w); // serves as H⁰; w¹ = w⁰
    let mut d_prev: Option<f64> = None;
    let mut h_gap_prev = 0.0;
    let mut schedule = BetaSchedule::new(lambda_min, cfg.l, cfg.restart_period);

    let mut trace = SolverTrace::default();
    let mut converged = false;
    let mut final_step = 0.0;
    let mut final_rel = f64::INFINITY;

    for t in 1..=cfg.max_iter {
        let active = active_set(phis, &w);
        let qh_prev = quad_form_h(phis, &active_prev, &w, cfg.c2);
        let qh_curr = quad_form_h(phis, &active, &w, cfg.c2);
        let h_gap = qh_prev - qh_curr;
        if exact && qh_curr > qh_prev + H_MONOTONE_SLACK {
            return Err(Error::NumericalFailure(format!(
                "active-set quadratic form increased at iteration {t}: {qh_curr} > {qh_prev}"
            )));
        }
        let qg = quad_form_g(g_blocks, &w);
        let step_in = w.dist(&w_prev);
        let descent = qg - qh_prev + 0.5 * cfg.l * step_in * step_in;
        if exact {
            if let Some(prev) = d_prev {
                let slack = DESCENT_SLACK * prev.abs().max(1.0);
                // without an active-set change, any increase means the
                // subproblem was not solved exactly; with one, the increase
                // can never exceed the recorded re-selection gap
                if descent > prev + h_gap_prev + slack {
                    return Err(Error::NumericalFailure(format!(
                        "descent quantity increased beyond the re-selection gap \
                         at iteration {t}: {descent} > {prev} + {h_gap_prev}"
                    )));
                }
                if cfg.descent_policy == DescentPolicy::Enforce && descent > prev + slack {
                    return Err(Error::NumericalFailure(format!(
                        "descent quantity increased at iteration {t}: {descent} > {prev}"
                    )));
                }
            }
        }
        d_prev = Some(descent);
        h_gap_prev = h_gap;

        let beta = schedule.next_beta();
        let u_data: Vec<f64> = w
            .as_slice()
            .iter()
            .zip(w_prev.as_slice())
            .map(|(wc, wp)| wc + beta * (wc - wp))
            .collect();
        let u = StackedWeights::from_vec(k, d, u_data);
        let xi = accumulate_xi(phis, &active, &w, cfg.c2);
        let rhs = combine_rhs(&u, &xi, cfg.l);
        let w_next = solve_blocks(&factors, &rhs, cfg.update_rule)?;
        let stationarity = stationarity_residual(g_blocks, cfg.l, &w_next, &rhs);
        if exact && stationarity > STATIONARITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "subproblem stationarity residual {stationarity:.3e} at iteration {t}"
            )));
        }

        trace.entries.push(TraceEntry {
            objective: qg - qh_curr,
            descent,
            step_norm: step_in,
            beta,
            stationarity,
            h_gap,
        });

        let step = w_next.dist(&w);
        let rel = step / w.norm().max(1.0);
        w_prev = w;
        w = w_next;
        active_prev = active;
        final_step = step;
        final_rel = rel;
        if rel <= cfg.tol {
            converged = true;
            break;
        }
    }

    if exact {
        // close the chain at the final iterate
        let active = active_set(phis, &w);
        let qh_prev = quad_form_h(phis, &active_prev, &w, cfg.c2);
        let qh_curr = quad_form_h(phis, &active, &w, cfg.c2);
        if qh_curr > qh_prev + H_MONOTONE_SLACK {
            return Err(Error::NumericalFailure(
                "active-set quadratic form increased at the final iterate".into(),
            ));
        }
        let d_final = quad_form_g(g_blocks, &w) - qh_prev + 0.5 * cfg.l * final_step * final_step;
        if let Some(prev) = d_prev {
            let slack = DESCENT_SLACK * prev.abs().max(1.0);
            if d_final > prev + h_gap_prev + slack {
                return Err(Error::NumericalFailure(format!(
                    "descent quantity increased beyond the re-selection gap \
                     at the final iterate: {d_final} > {prev} + {h_gap_prev}"
                )));
            }
            if cfg.descent_policy == DescentPolicy::Enforce && d_final > prev + slack {
                return Err(Error::NumericalFailure(format!(
                    "descent quantity increased at the final iterate: {d_final} > {prev}"
                )));
            }
        }
    }

    trace.final_step_norm = final_step;
    trace.final_rel_step = final_rel;
    trace.converged = converged;
    Ok(SolveOutcome { weights: w, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn beta_starts_at_zero() {
        let mut s = BetaSchedule::new(1.0, 2.0, 100);
        assert_eq!(s.next_beta(), 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn cap_value() {
        assert!((extrapolation_cap(1.0, 2.0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((extrapolation_cap(1.0, 2.0) - 0.70711).abs() < 1e-5);
        assert_eq!(extrapolation_cap(0.0, 1.0), 0.0);
        assert_eq!(extrapolation_cap(-0.5, 1.0), 0.0);
    }

    #[test]
    fn beta_third_iteration_matches_recursion() {
        // oracle: iterate the θ recursion directly
        let mut theta = [1.0f64, 1.0];
        let mut betas = Vec::new();
        for _ in 1..=3 {
            betas.push((theta[0] - 1.0) / theta[1]);
            let next = 0.5 * (1.0 + (1.0 + 4.0 * theta[1] * theta[1]).sqrt());
            theta = [theta[1], next];
        }
        assert!((betas[2] - 0.28175).abs() < 1e-5);

        let mut s = BetaSchedule::new(1.0, 2.0, 100);
        let got: Vec<f64> = (0..3).map(|_| s.next_beta()).collect();
        assert_eq!(got[0], 0.0);
        assert_eq!(got[1], 0.0);
        assert!((got[2] - betas[2]).abs() < 1e-12);
    }

    #[test]
    fn beta_restart_resets_theta() {
        let mut s = BetaSchedule::new(100.0, 1.0, 3);
        let first_cycle: Vec<f64> = (0..3).map(|_| s.next_beta()).collect();
        let second_cycle: Vec<f64> = (0..3).map(|_| s.next_beta()).collect();
        assert_eq!(first_cycle, second_cycle);
    }

    #[test]
    fn beta_stays_in_unit_interval() {
        let mut s = BetaSchedule::new(5.0, 0.001, 1000);
        for _ in 0..200 {
            let b = s.next_beta();
            assert!((0.0..1.0).contains(&b));
        }
    }

    #[test]
    fn active_set_zero_weights_ties_to_first() {
        let phis = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, -1.0]]);
        let w = StackedWeights::zeros(3, 2);
        assert_eq!(active_set(&phis, &w), vec![1, 1]);
    }

    #[test]
    fn doubled_variant_runs_unchecked() {
        // doubles the exact minimizer each step; kept for comparison, so it
        // must complete without tripping the exactness contracts
        let g_blocks = vec![SymMatrix::identity(2), SymMatrix::identity(2)];
        let phis = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.5, 1.0]]);
        let cfg = NsvmConfig {
            max_iter: 5,
            update_rule: UpdateRule::Doubled,
            ..NsvmConfig::default()
        };
        let w0 = random_init(2, 2, 3);
        let out = solve(&g_blocks, &phis, &cfg, 1.0, w0).unwrap();
        assert_eq!(out.trace.len(), 5);
        // the doubled update overshoots the stationarity system by design
        assert!(out.trace.entries.iter().any(|e| e.stationarity > 1e-8));
    }

    #[test]
    fn dca_step_diagonal_example() {
        // blocks are 1x1 identities, L = 2, u = (1, 0), ξ = (0, 4):
        // (2G + L·I) = 4I, rhs = (2, 4), so the step lands on (0.5, 1)
        let g_blocks = vec![SymMatrix::identity(1), SymMatrix::identity(1)];
        let phis = Matrix::from_rows(&[vec![2.0]]);
        let active = vec![2];
        let w = StackedWeights::from_vec(2, 1, vec![0.9, 0.5]); // ξ₂ = 2·2·(2·0.5) = 4
        let u = StackedWeights::from_vec(2, 1, vec![1.0, 0.0]);
        let next = dca_step(&g_blocks, &phis, &active, &w, &u, 1.0, 2.0).unwrap();
        assert!((next.block(0)[0] - 0.5).abs() < 1e-12);
        assert!((next.block(1)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dca_step_zero_is_fixed_point() {
        let g_blocks = vec![SymMatrix::identity(2), SymMatrix::identity(2)];
        let phis = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let w = StackedWeights::zeros(2, 2);
        let u = StackedWeights::zeros(2, 2);
        let active = active_set(&phis, &w);
        let next = dca_step(&g_blocks, &phis, &active, &w, &u, 1.0, 1.0).unwrap();
        assert_eq!(next.as_slice(), w.as_slice());
    }

    #[test]
    fn dca_step_decreases_the_subproblem() {
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..20 {
            let k = rng.random_range(2..=3);
            let d = rng.random_range(1..=4);
            let m = rng.random_range(2..=10);
            let mut g_blocks = Vec::new();
            for _ in 0..k {
                let mut g = SymMatrix::identity(d);
                for _ in 0..d {
                    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                    g.add_scaled_outer(&v, 1.0);
                }
                g_blocks.push(g);
            }
            let phis = Matrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0));
            let wv: Vec<f64> = (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let w = StackedWeights::from_vec(k, d, wv);
            let uv: Vec<f64> = (0..k * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let u = StackedWeights::from_vec(k, d, uv);
            let (c2, l) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
            let active = active_set(&phis, &w);
            let next = dca_step(&g_blocks, &phis, &active, &w, &u, c2, l).unwrap();

            // oracle: evaluate f_t at both points
            let f_t = |p: &StackedWeights| {
                let xi = accumulate_xi(&phis, &active, &w, c2);
                let du: Vec<f64> = p
                    .as_slice()
                    .iter()
                    .zip(u.as_slice())
                    .map(|(a, b)| a - b)
                    .collect();
                quad_form_g(&g_blocks, p) + 0.5 * l * dot(&du, &du)
                    - dot(p.as_slice(), xi.as_slice())
            };
            assert!(f_t(&next) <= f_t(&w) + 1e-12 * (1.0 + f_t(&w).abs()));
        }
    }

    #[test]
    fn solve_respects_max_iter_one() {
        let g_blocks = vec![SymMatrix::identity(2), SymMatrix::identity(2)];
        let phis = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        let cfg = NsvmConfig {
            max_iter: 1,
            ..NsvmConfig::default()
        };
        let w0 = random_init(2, 2, 0);
        let out = solve(&g_blocks, &phis, &cfg, 1.0, w0).unwrap();
        assert_eq!(out.trace.len(), 1);
        assert!(!out.trace.converged || out.trace.final_rel_step <= cfg.tol);
    }

    #[test]
    fn solve_trace_descent_is_nonincreasing() {
        // model-shaped instances: classes on distinct parallel lines
        // (x0 = class offset), augmented rows with a bias column, G
        // assembled from the same φ rows the H terms draw on
        let mut rng = StdRng::seed_from_u64(123);
        for run in 0..10 {
            let k = 3;
            let d = 3; // two features plus bias
            let m = 18;
            let labels: Vec<usize> = (0..m).map(|i| i % k + 1).collect();
            let phis = Matrix::from_fn(m, d, |i, j| {
                let class = (i % k) as f64;
                match j {
                    0 => 3.0 * class + rng.random_range(-0.05..0.05),
                    1 => rng.random_range(-1.0..1.0),
                    _ => 1.0,
                }
            });
            let (c1, c2) = (1.0, 1.0);
            let mut g_blocks = vec![SymMatrix::zeros(d); k];
            for block in &mut g_blocks {
                for j in 0..d - 1 {
                    // ½·diag(I, 0) regularization block
                    let mut e = vec![0.0; d];
                    e[j] = 1.0;
                    block.add_scaled_outer(&e, 0.5);
                }
            }
            for (i, &label) in labels.iter().enumerate() {
                g_blocks[label - 1].add_scaled_outer(phis.row(i), c1 + c2);
            }
            let lambda = crate::linalg::min_eig_blockdiag(&g_blocks)
                .unwrap()
                .max(0.0);
            let cfg = NsvmConfig {
                c1,
                c2,
                max_iter: 60,
                seed: run,
                ..NsvmConfig::default()
            };
            let w0 = class_planes_init(&phis, &labels, k).unwrap();
            let out = solve(&g_blocks, &phis, &cfg, lambda, w0).unwrap();
            for pair in out.trace.entries.windows(2) {
                let slack = 1e-10 * pair[0].descent.abs().max(1.0);
                // unconditional: any rise is bounded by the re-selection gap,
                // and without a re-selection there is no rise at all
                assert!(pair[1].descent <= pair[0].descent + pair[0].h_gap + slack);
                if pair[0].h_gap == 0.0 {
                    assert!(pair[1].descent <= pair[0].descent + slack);
                }
                assert!(pair[1].h_gap >= -1e-10);
            }
            for e in &out.trace.entries {
                assert!(e.stationarity <= 1e-8);
                assert!((0.0..1.0).contains(&e.beta));
            }
        }
    }
}
