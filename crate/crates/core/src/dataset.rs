//! Data ingestion (CSV and libsvm formats), label encoding, feature
//! standardization, stratified fold planning, and two synthetic generators.
//!
//! Labels are encoded `1..=K` by sorted order of the distinct label tokens:
//! numeric tokens sort numerically, anything else lexicographically. This
//! keeps the encoding stable across row shuffles.

use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::Error;
use crate::linalg::Matrix;

/// A labelled dataset: `x` is m×n with one sample per row, `y` holds encoded
/// labels in `1..=K`. Every class has at least one sample, `m >= K >= 2`,
/// and no entry is NaN or infinite.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Matrix,
    y: Vec<usize>,
    label_names: Vec<String>,
}

impl Dataset {
    /// Validating constructor. `label_names[k-1]` is the original token for
    /// encoded label `k`.
    pub fn from_parts(x: Matrix, y: Vec<usize>, label_names: Vec<String>) -> Result<Self, Error> {
        let k = label_names.len();
        if k < 2 {
            return Err(Error::TooFewClasses { found: k });
        }
        if y.len() != x.rows() {
            return Err(Error::LengthMismatch {
                left: x.rows(),
                right: y.len(),
            });
        }
        if x.rows() < k {
            return Err(Error::BadParams(format!(
                "{} samples cannot cover {} classes",
                x.rows(),
                k
            )));
        }
        if x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("non-finite feature value".into()));
        }
        let mut counts = vec![0usize; k];
        for &label in &y {
            if label < 1 || label > k {
                return Err(Error::BadLabel { label, classes: k });
            }
            counts[label - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class: empty + 1 });
        }
        Ok(Dataset { x, y, label_names })
    }

    /// Skips invariant checks; test-only escape hatch for exercising
    /// downstream `EmptyClass` paths.
    #[doc(hidden)]
    pub fn from_parts_unchecked(x: Matrix, y: Vec<usize>, label_names: Vec<String>) -> Self {
        Dataset { x, y, label_names }
    }

    /// Encode labels from raw tokens and build the dataset.
    pub fn from_labeled_rows(rows: Vec<Vec<f64>>, tokens: Vec<String>) -> Result<Self, Error> {
        let mut distinct: Vec<String> = tokens.to_vec();
        distinct.sort();
        distinct.dedup();
        if distinct.len() < 2 {
            return Err(Error::TooFewClasses {
                found: distinct.len(),
            });
        }
        let all_numeric = distinct.iter().all(|t| t.parse::<f64>().is_ok());
        if all_numeric {
            distinct.sort_by(|a, b| {
                let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
                x.partial_cmp(&y).unwrap().then_with(|| a.cmp(b))
            });
        }
        let y: Vec<usize> = tokens
            .iter()
            .map(|t| distinct.iter().position(|d| d == t).unwrap() + 1)
            .collect();
        Dataset::from_parts(Matrix::from_rows(&rows), y, distinct)
    }

    pub fn samples(&self) -> usize {
        self.x.rows()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    pub fn classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    /// Encoded labels, each in `1..=K`.
    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// Original token for an encoded label.
    pub fn label_name(&self, label: usize) -> &str {
        &self.label_names[label - 1]
    }

    /// Sample indices per class, ascending; `result[k-1]` is class `k`.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.classes()];
        for (i, &label) in self.y.iter().enumerate() {
            out[label - 1].push(i);
        }
        out
    }

    /// Sub-dataset keeping the given rows; fails with `EmptyClass` when a
    /// class vanishes from the selection.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset, Error> {
        let x = self.x.select_rows(idx);
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::from_parts(x, y, self.label_names.clone())
    }
}

/// Per-feature affine transform fitted on training data: subtract `mean`,
/// divide by `scale` (population standard deviation; features with no
/// variance keep scale 1 so they pass through centered).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Standardizer {
        let (m, n) = (x.rows(), x.cols());
        let mut mean = vec![0.0; n];
        for i in 0..m {
            for (j, v) in x.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        for v in &mut mean {
            *v /= m as f64;
        }
        let mut var = vec![0.0; n];
        for i in 0..m {
            for (j, v) in x.row(i).iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let scale = var
            .iter()
            .zip(&mean)
            .map(|(&v, &mu)| {
                let sd = (v / m as f64).sqrt();
                if sd <= 1e-12 * (1.0 + mu.abs()) {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    /// Identity transform for models built directly from weights.
    pub fn identity(n: usize) -> Standardizer {
        Standardizer {
            mean: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            (x.get(i, j) - self.mean[j]) / self.scale[j]
        })
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (mu, s))| (v - mu) / s)
            .collect()
    }
}

/// A stratified partition of `0..m` into `k` disjoint folds. Within each
/// class the per-fold counts differ by at most one.
#[derive(Debug, Clone)]
pub struct FoldPlan {
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldPlan {
    /// Training indices for fold `f`: everything outside the fold, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Deterministic stratified k-fold plan: within each class, indices are
/// shuffled by the seeded generator and dealt round-robin to folds.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, Error> {
    let m = d.samples();
    if k < 2 || k > m {
        return Err(Error::BadFoldCount {
            folds: k,
            samples: m,
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut cursor = 0usize;
    for class in d.class_indices() {
        let mut idx = class;
        idx.shuffle(&mut rng);
        // the dealing cursor persists across classes so total fold sizes
        // stay balanced and k = m yields leave-one-out
        for sample in idx {
            folds[cursor % k].push(sample);
            cursor += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldPlan { folds, seed })
}

fn draw_standard_normal(rng: &mut StdRng) -> f64 {
    // Box-Muller; 1 - u keeps the log argument in (0, 1]
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Four classes in the plane, one per line, with perpendicular Gaussian
/// noise and a fraction of samples re-drawn uniformly as outliers.
///
/// Class lines: `x2 = x1`, `x2 = -x1`, `x2 = x1 + 2`, `x2 = -x1 - 2`, with
/// `x1` uniform on [-2, 2]; outliers are uniform on [-3, 3]².
pub fn gen_cross_planes(
    per_class: usize,
    noise_sd: f64,
    outlier_frac: f64,
    seed: u64,
) -> Result<Dataset, Error> {
    if per_class < 2 {
        return Err(Error::BadParams("per_class must be at least 2".into()));
    }
    if !(0.0..0.5).contains(&outlier_frac) {
        return Err(Error::BadParams("outlier_frac must be in [0, 0.5)".into()));
    }
    if !noise_sd.is_finite() || noise_sd < 0.0 {
        return Err(Error::BadParams("noise_sd must be nonnegative".into()));
    }
    let sqrt_half = 0.5f64.sqrt();
    // (point on line at x1 = t, unit normal)
    type Line = (fn(f64) -> [f64; 2], [f64; 2]);
    let lines: [Line; 4] = [
        (|t| [t, t], [-sqrt_half, sqrt_half]),
        (|t| [t, -t], [sqrt_half, sqrt_half]),
        (|t| [t, t + 2.0], [-sqrt_half, sqrt_half]),
        (|t| [t, -t - 2.0], [sqrt_half, sqrt_half]),
    ];
    let mut rng = StdRng::seed_from_u64(seed);
    let n_outliers = (outlier_frac * per_class as f64).floor() as usize;
    let mut rows = Vec::with_capacity(4 * per_class);
    let mut y = Vec::with_capacity(4 * per_class);
    for (class, (point, normal)) in lines.iter().enumerate() {
        let start = rows.len();
        for _ in 0..per_class {
            let t = rng.random_range(-2.0..2.0);
            let eps = noise_sd * draw_standard_normal(&mut rng);
            let p = point(t);
            rows.push(vec![p[0] + eps * normal[0], p[1] + eps * normal[1]]);
            y.push(class + 1);
        }
        for row in rows.iter_mut().skip(start).take(n_outliers) {
            *row = vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        }
    }
    let label_names = (1..=4).map(|c| c.to_string()).collect();
    Dataset::from_parts(Matrix::from_rows(&rows), y, label_names)
}

/// The four-point XOR set: class 1 on the main diagonal `(1,1), (-1,-1)`,
/// class 2 on the anti-diagonal `(1,-1), (-1,1)`. No single hyperplane
/// separates the two classes.
pub fn gen_xor() -> Dataset {
    let rows = vec![
        vec![1.0, 1.0],
        vec![-1.0, -1.0],
        vec![1.0, -1.0],
        vec![-1.0, 1.0],
    ];
    let y = vec![1, 1, 2, 2];
    Dataset::from_parts(Matrix::from_rows(&rows), y, vec!["1".into(), "2".into()])
        .expect("static dataset is valid")
}

/// Load a comma-separated file: `n` numeric fields then one label token per
/// row, optional single header line.
pub fn load_csv(path: &Path, has_header: bool) -> Result<Dataset, Error> {
    let (rows, tokens) = load_csv_rows(path, has_header)?;
    Dataset::from_labeled_rows(rows, tokens)
}

/// Parse a CSV file into raw feature rows and label tokens, without
/// encoding labels or requiring two classes (prediction inputs ignore the
/// label column).
pub fn load_csv_rows(path: &Path, has_header: bool) -> Result<(Vec<Vec<f64>>, Vec<String>), Error> {
    let content = fs::read_to_string(path)?;
    parse_csv_rows(&content, has_header)
}

fn parse_csv_rows(content: &str, has_header: bool) -> Result<(Vec<Vec<f64>>, Vec<String>), Error> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (line_no, line) in content.lines().enumerate() {
        let row = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        if has_header && row == 1 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                line: row,
                col: 1,
                msg: "expected at least one feature and a label".into(),
            });
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(Error::Parse {
                    line: row,
                    col: fields.len(),
                    msg: format!("expected {w} fields, found {}", fields.len()),
                })
            }
            _ => {}
        }
        let mut values = Vec::with_capacity(fields.len() - 1);
        for (col, field) in fields[..fields.len() - 1].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: row,
                col: col + 1,
                msg: format!("not a number: {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: row,
                    col: col + 1,
                    msg: "non-finite value".into(),
                });
            }
            values.push(v);
        }
        rows.push(values);
        tokens.push(fields[fields.len() - 1].to_string());
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }
    Ok((rows, tokens))
}

/// Load a libsvm-format file: `label idx:val ...` with 1-based indices.
/// Missing indices are zero-filled; the feature count is the largest index
/// seen anywhere. A repeated index within one line is rejected.
pub fn load_libsvm(path: &Path) -> Result<Dataset, Error> {
    let (rows, tokens) = load_libsvm_rows(path)?;
    Dataset::from_labeled_rows(rows, tokens)
}

/// Parse a libsvm file into raw feature rows and label tokens, without
/// encoding labels or requiring two classes.
pub fn load_libsvm_rows(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>), Error> {
    let content = fs::read_to_string(path)?;
    parse_libsvm_rows(&content)
}

fn parse_libsvm_rows(content: &str) -> Result<(Vec<Vec<f64>>, Vec<String>), Error> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut tokens: Vec<String> = Vec::new();
    let mut max_index = 0usize;
    for (line_no, line) in content.lines().enumerate() {
        let row = line_no + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("non-empty line has a first token");
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (pos, field) in fields.enumerate() {
            let col = pos + 2; // field position on the line, label is 1
            let (idx_str, val_str) = field.split_once(':').ok_or_else(|| Error::Parse {
                line: row,
                col,
                msg: format!("expected idx:val, found {field:?}"),
            })?;
            let idx: usize = idx_str.parse().map_err(|_| Error::Parse {
                line: row,
                col,
                msg: format!("bad feature index {idx_str:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line: row,
                    col,
                    msg: "feature indices are 1-based".into(),
                });
            }
            let val: f64 = val_str.parse().map_err(|_| Error::Parse {
                line: row,
                col,
                msg: format!("bad feature value {val_str:?}"),
            })?;
            if !val.is_finite() {
                return Err(Error::Parse {
                    line: row,
                    col,
                    msg: "non-finite value".into(),
                });
            }
            if entries.iter().any(|&(i, _)| i == idx) {
                return Err(Error::Parse {
                    line: row,
                    col,
                    msg: format!("duplicate feature index {idx}"),
                });
            }
            max_index = max_index.max(idx);
            entries.push((idx, val));
        }
        sparse.push(entries);
        tokens.push(label.to_string());
    }
    if sparse.is_empty() {
        return Err(Error::Parse {
            line: 1,
            col: 1,
            msg: "no data rows".into(),
        });
    }
    let rows: Vec<Vec<f64>> = sparse
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; max_index];
            for (idx, val) in entries {
                row[idx - 1] = val;
            }
            row
        })
        .collect();
    Ok((rows, tokens))
}
