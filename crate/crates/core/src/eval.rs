//! Accuracy metrics, stratified cross-validation, grid search over
//! power-of-two parameter axes, and a paired t-test over fold accuracies.

use std::time::Instant;

use crate::baselines::PlaneModel;
use crate::dataset::{stratified_kfold, Dataset};
use crate::error::Error;
use crate::linalg::Matrix;
use crate::nsvm_kernel::KernelNsvmModel;
use crate::nsvm_linear::LinearNsvmModel;

/// Anything that maps raw feature rows to 1-based class labels.
pub trait Classifier {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error>;
}

impl Classifier for LinearNsvmModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
        LinearNsvmModel::predict(self, x)
    }
}

impl Classifier for KernelNsvmModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
        KernelNsvmModel::predict(self, x)
    }
}

impl Classifier for PlaneModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
        PlaneModel::predict(self, x)
    }
}

/// Fraction of matching labels.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64, Error> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// K×K counts with `confusion[r][c]` = samples of true class `r+1`
/// predicted as class `c+1`.
pub fn confusion(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<Vec<Vec<usize>>, Error> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t < 1 || t > k {
            return Err(Error::BadLabel {
                label: t,
                classes: k,
            });
        }
        if p < 1 || p > k {
            return Err(Error::BadLabel {
                label: p,
                classes: k,
            });
        }
        counts[t - 1][p - 1] += 1;
    }
    Ok(counts)
}

/// Cross-validation result: one accuracy per fold plus summary statistics.
#[derive(Debug, Clone)]
pub struct CvReport {
    pub fold_accuracies: Vec<f64>,
    /// Mean fold accuracy.
    pub mean: f64,
    /// Population standard deviation of the fold accuracies.
    pub std: f64,
    /// Wall time spent training and scoring each fold, in seconds.
    pub fold_seconds: Vec<f64>,
    /// Filled by grid search with the winning cell, in axis order.
    pub chosen_params: Option<Vec<(String, f64)>>,
}

impl CvReport {
    fn from_folds(fold_accuracies: Vec<f64>, fold_seconds: Vec<f64>) -> CvReport {
        let k = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / k;
        let var = fold_accuracies
            .iter()
            .map(|a| (a - mean) * (a - mean))
            .sum::<f64>()
            / k;
        CvReport {
            fold_accuracies,
            mean,
            std: var.sqrt(),
            fold_seconds,
            chosen_params: None,
        }
    }
}

/// Stratified k-fold cross-validation. Each fold trains on the other k−1
/// folds and scores on the held-out one; the trainer sees only the training
/// split, so anything it fits (standardization included) cannot leak from
/// the test fold. Trainer failures are reported with the fold index.
pub fn cross_validate<M, F>(train: F, d: &Dataset, k: usize, seed: u64) -> Result<CvReport, Error>
where
    M: Classifier,
    F: Fn(&Dataset) -> Result<M, Error>,
{
    let plan = stratified_kfold(d, k, seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut fold_seconds = Vec::with_capacity(k);
    for (f, fold) in plan.folds.iter().enumerate() {
        let started = Instant::now();
        let wrap = |e: Error| Error::CvFold {
            fold: f,
            source: Box::new(e),
        };
        let train_split = d.subset(&plan.train_indices(f)).map_err(wrap)?;
        let model = train(&train_split).map_err(wrap)?;
        let test_x = d.x().select_rows(fold);
        let y_true: Vec<usize> = fold.iter().map(|&i| d.y()[i]).collect();
        let y_pred = model.predict(&test_x).map_err(wrap)?;
        fold_accuracies.push(accuracy(&y_true, &y_pred)?);
        fold_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(CvReport::from_folds(fold_accuracies, fold_seconds))
}

/// Named hyperparameter axes; the grid is their cartesian product.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub axes: Vec<(String, Vec<f64>)>,
}

impl GridSpec {
    pub fn new(axes: Vec<(String, Vec<f64>)>) -> Result<GridSpec, Error> {
        if axes.is_empty() || axes.iter().any(|(_, v)| v.is_empty()) {
            return Err(Error::BadParams("every grid axis needs values".into()));
        }
        Ok(GridSpec { axes })
    }

    /// The full power-of-two candidate set `2^-10 ..= 2^10`.
    pub fn default_axis() -> Vec<f64> {
        (-10..=10).map(|e| 2f64.powi(e)).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    /// All cells in odometer order (last axis fastest).
    pub fn cells(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for (_, values) in &self.axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for prefix in &out {
                for &v in values {
                    let mut cell = prefix.clone();
                    cell.push(v);
                    next.push(cell);
                }
            }
            out = next;
        }
        out
    }
}

/// Grid search outcome: the winning cell and its cross-validation report.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best_params: Vec<f64>,
    pub report: CvReport,
}

fn tuple_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Evaluate every grid cell by cross-validation and keep the one with the
/// highest mean accuracy. Exact ties resolve to the lexicographically
/// smallest parameter tuple (in axis order), so the result does not depend
/// on evaluation order.
pub fn grid_search<M, F>(
    train_cell: F,
    d: &Dataset,
    grid: &GridSpec,
    k: usize,
    seed: u64,
) -> Result<GridSearchOutcome, Error>
where
    M: Classifier,
    F: Fn(&[f64], &Dataset) -> Result<M, Error>,
{
    let mut best: Option<(Vec<f64>, CvReport)> = None;
    for cell in grid.cells() {
        let report = cross_validate(|split| train_cell(&cell, split), d, k, seed)?;
        let replace = match &best {
            None => true,
            Some((bc, br)) => {
                report.mean > br.mean || (report.mean == br.mean && tuple_less(&cell, bc))
            }
        };
        if replace {
            best = Some((cell, report));
        }
    }
    let (best_params, mut report) = best.expect("grid has at least one cell");
    report.chosen_params = Some(
        grid.axes
            .iter()
            .map(|(name, _)| name.clone())
            .zip(best_params.iter().copied())
            .collect(),
    );
    Ok(GridSearchOutcome {
        best_params,
        report,
    })
}

/// Two-sided paired t-test result.
#[derive(Debug, Clone, Copy)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_freedom: usize,
    pub p_value: f64,
}

/// Paired t-test on two accuracy vectors (one entry per fold). Uses the
/// sample (k−1) standard deviation of the differences; all-zero differences
/// give `t = 0, p = 1`, zero-variance nonzero-mean differences give `p = 0`.
pub fn paired_ttest(acc_a: &[f64], acc_b: &[f64]) -> Result<TTestResult, Error> {
    if acc_a.len() != acc_b.len() {
        return Err(Error::LengthMismatch {
            left: acc_a.len(),
            right: acc_b.len(),
        });
    }
    let k = acc_a.len();
    if k < 2 {
        return Err(Error::TooFewFolds { folds: k });
    }
    let diffs: Vec<f64> = acc_a.iter().zip(acc_b).map(|(a, b)| a - b).collect();
    let mean = diffs.iter().sum::<f64>() / k as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (k - 1) as f64;
    let df = k - 1;
    if var == 0.0 {
        return Ok(if mean == 0.0 {
            TTestResult {
                t_statistic: 0.0,
                degrees_freedom: df,
                p_value: 1.0,
            }
        } else {
            TTestResult {
                t_statistic: if mean > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                degrees_freedom: df,
                p_value: 0.0,
            }
        });
    }
    let t = mean / (var.sqrt() / (k as f64).sqrt());
    Ok(TTestResult {
        t_statistic: t,
        degrees_freedom: df,
        p_value: student_t_two_sided_p(t, df),
    })
}

/// Two-sided tail probability of the Student-t distribution, via the
/// regularized incomplete beta function: `p = I_{ν/(ν+t²)}(ν/2, 1/2)`.
pub fn student_t_two_sided_p(t: f64, df: usize) -> f64 {
    let v = df as f64;
    reg_inc_beta(0.5 * v, 0.5, v / (v + t * t)).clamp(0.0, 1.0)
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction.
fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front =
        (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

// modified Lentz evaluation of the incomplete-beta continued fraction
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 3e-16;
    const FPMIN: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

// Lanczos approximation, g = 7, 9 coefficients
#[allow(clippy::excessive_precision)]
fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEF.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_cross_planes, Standardizer};
    use crate::mpdca::NsvmConfig;
    use crate::nsvm_linear::train_linear;

    struct ConstantModel(usize);
    impl Classifier for ConstantModel {
        fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
            Ok(vec![self.0; x.rows()])
        }
    }

    fn balanced_two_class(m_per: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..2 * m_per).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<usize> = (0..2 * m_per).map(|i| i % 2 + 1).collect();
        Dataset::from_parts(Matrix::from_rows(&rows), y, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn accuracy_trivials() {
        assert_eq!(accuracy(&[1, 2], &[1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 2], &[2, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1, 2, 2], &[1, 2, 2, 2]).unwrap(), 0.75);
        assert!(matches!(
            accuracy(&[1], &[1, 2]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn confusion_counts() {
        let c = confusion(&[1, 1, 2, 2], &[1, 2, 2, 2], 2).unwrap();
        assert_eq!(c, vec![vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn constant_trainer_scores_half_on_balanced_data() {
        let d = balanced_two_class(10);
        let report = cross_validate(|_| Ok(ConstantModel(1)), &d, 5, 3).unwrap();
        assert!((report.mean - 0.5).abs() < 1e-12);
        for a in &report.fold_accuracies {
            assert!((0.0..=1.0).contains(a));
        }
        let manual: f64 =
            report.fold_accuracies.iter().sum::<f64>() / report.fold_accuracies.len() as f64;
        assert_eq!(report.mean, manual);
    }

    #[test]
    fn cross_validation_is_deterministic() {
        let d = gen_cross_planes(20, 0.1, 0.0, 11).unwrap();
        let cfg = NsvmConfig {
            c1: 0.0625,
            c2: 0.015625,
            ..NsvmConfig::default()
        };
        let run = || cross_validate(|s| train_linear(s, &cfg).map(|(m, _)| m), &d, 4, 9).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.fold_accuracies, b.fold_accuracies);
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std, b.std);
    }

    #[test]
    fn standardizer_fits_training_split_only() {
        let d = gen_cross_planes(15, 0.2, 0.0, 2).unwrap();
        let k = 5;
        let seed = 4;
        let plan = crate::dataset::stratified_kfold(&d, k, seed).unwrap();
        let fold = std::cell::Cell::new(0usize);
        let cfg = NsvmConfig::default();
        cross_validate(
            |split| {
                let (model, _) = train_linear(split, &cfg)?;
                // oracle: the per-feature means of the split the trainer saw
                let train_idx = plan.train_indices(fold.get());
                let m = train_idx.len() as f64;
                for j in 0..d.features() {
                    let mean: f64 = train_idx.iter().map(|&i| d.x().get(i, j)).sum::<f64>() / m;
                    assert!((model.standardizer.mean[j] - mean).abs() < 1e-12);
                }
                fold.set(fold.get() + 1);
                Ok(model)
            },
            &d,
            k,
            seed,
        )
        .unwrap();
    }

    #[test]
    fn trainer_errors_carry_fold_index() {
        let d = balanced_two_class(6);
        let err = cross_validate(
            |_| -> Result<ConstantModel, Error> { Err(Error::BadParams("nope".into())) },
            &d,
            3,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::CvFold { fold: 0, .. }));
    }

    #[test]
    fn grid_single_cell_wins() {
        let d = balanced_two_class(8);
        let grid = GridSpec::new(vec![("c".into(), vec![2.0])]).unwrap();
        let out = grid_search(
            |cell, _| Ok(ConstantModel(cell[0] as usize)),
            &d,
            &grid,
            4,
            1,
        )
        .unwrap();
        assert_eq!(out.best_params, vec![2.0]);
        assert_eq!(out.report.chosen_params, Some(vec![("c".to_string(), 2.0)]));
    }

    #[test]
    fn grid_prefers_true_model_over_constant() {
        // cell value 1 trains a real model, cell value 0 predicts class 1
        let d = gen_cross_planes(20, 0.05, 0.0, 7).unwrap();
        let grid = GridSpec::new(vec![("use_model".into(), vec![0.0, 1.0])]).unwrap();
        enum Either {
            Constant,
            Model(crate::nsvm_linear::LinearNsvmModel),
        }
        impl Classifier for Either {
            fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
                match self {
                    Either::Constant => Ok(vec![1; x.rows()]),
                    Either::Model(m) => m.predict(x),
                }
            }
        }
        let cfg = NsvmConfig {
            c1: 0.0625,
            c2: 0.015625,
            ..NsvmConfig::default()
        };
        let out = grid_search(
            |cell, split| {
                if cell[0] == 0.0 {
                    Ok(Either::Constant)
                } else {
                    Ok(Either::Model(train_linear(split, &cfg)?.0))
                }
            },
            &d,
            &grid,
            5,
            7,
        )
        .unwrap();
        assert_eq!(out.best_params, vec![1.0]);
    }

    #[test]
    fn grid_tie_takes_lexicographically_smallest() {
        let d = balanced_two_class(8);
        // every cell scores identically; order of candidate values reversed
        let grid = GridSpec::new(vec![
            ("a".into(), vec![4.0, 1.0, 2.0]),
            ("b".into(), vec![9.0, 3.0]),
        ])
        .unwrap();
        let out = grid_search(|_, _| Ok(ConstantModel(1)), &d, &grid, 4, 0).unwrap();
        assert_eq!(out.best_params, vec![1.0, 3.0]);
    }

    #[test]
    fn ttest_identical_vectors() {
        let a = [0.9, 0.8, 0.95, 0.85];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!(r.t_statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ttest_zero_variance_nonzero_mean() {
        let a = [0.9, 0.9, 0.9];
        let b = [0.8, 0.8, 0.8];
        let r = paired_ttest(&a, &b).unwrap();
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn ttest_classic_critical_value() {
        // |t| = 2.262 at 9 degrees of freedom sits at the 5% two-sided level
        let p = student_t_two_sided_p(2.262, 9);
        assert!((p - 0.050).abs() <= 0.002, "p = {p}");
        let p_neg = student_t_two_sided_p(-2.262, 9);
        assert_eq!(p, p_neg);
    }

    #[test]
    fn ttest_p_against_numerical_integration() {
        // oracle: Simpson integration of the unnormalized t density for
        // df = 9; tails beyond |x| = 400 are negligible at this df
        let df = 9.0;
        let density = |x: f64| (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = density(a) + density(b);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * density(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let total = simpson(-400.0, 400.0, 800_000);
        for t in [0.5, 1.0, 2.262, 3.0, 5.0] {
            let tail = simpson(t, 400.0, 400_000);
            let oracle = 2.0 * tail / total;
            let got = student_t_two_sided_p(t, 9);
            assert!((got - oracle).abs() < 1e-6, "t={t}: {got} vs {oracle}");
        }
    }

    #[test]
    fn ttest_monotone_in_t_magnitude() {
        let p2 = student_t_two_sided_p(2.0, 9);
        let p3 = student_t_two_sided_p(3.0, 9);
        assert!(p3 < p2);
        assert!((0.0..=1.0).contains(&p2));
        assert!((0.0..=1.0).contains(&p3));
    }

    #[test]
    fn ttest_rejects_bad_inputs() {
        assert!(matches!(
            paired_ttest(&[1.0], &[1.0]),
            Err(Error::TooFewFolds { .. })
        ));
        assert!(matches!(
            paired_ttest(&[1.0, 0.5], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn standardizer_identity_is_noop() {
        let s = Standardizer::identity(2);
        assert_eq!(s.apply_row(&[3.0, -1.0]), vec![3.0, -1.0]);
    }
}
