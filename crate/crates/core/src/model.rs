//! Trained-model persistence: one self-describing, line-oriented text
//! format for all five algorithms, with a `format_version` header.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! saved model reloads to bit-identical coefficients and therefore
//! bit-identical predictions. Files are written atomically
//! (write-then-rename).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::baselines::{DistanceRule, PlaneModel};
use crate::dataset::Standardizer;
use crate::error::Error;
use crate::eval::Classifier;
use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::mpdca::StackedWeights;
use crate::nsvm_kernel::{KernelNsvmModel, KernelRule};
use crate::nsvm_linear::LinearNsvmModel;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "nsvm-model";

/// Which trainer produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    NsvmLinear,
    NsvmKernel,
    Gepsvm,
    Lstsvm,
    Pcc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::NsvmLinear => "nsvm-linear",
            Algorithm::NsvmKernel => "nsvm-kernel",
            Algorithm::Gepsvm => "gepsvm",
            Algorithm::Lstsvm => "lstsvm",
            Algorithm::Pcc => "pcc",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Some(match s {
            "nsvm-linear" => Algorithm::NsvmLinear,
            "nsvm-kernel" => Algorithm::NsvmKernel,
            "gepsvm" => Algorithm::Gepsvm,
            "lstsvm" => Algorithm::Lstsvm,
            "pcc" => Algorithm::Pcc,
            _ => return None,
        })
    }
}

/// Algorithm-specific payload of a trained model.
#[derive(Debug, Clone)]
pub enum ModelKind {
    NsvmLinear(LinearNsvmModel),
    NsvmKernel(KernelNsvmModel),
    Planes {
        algorithm: Algorithm,
        model: PlaneModel,
    },
}

/// A trained model plus everything needed to apply and describe it: the
/// original label tokens and an echo of the training parameters.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub label_names: Vec<String>,
    pub kind: ModelKind,
    /// Numeric training parameters, in a stable order.
    pub hyper: Vec<(String, f64)>,
    /// Non-numeric training options (update rule, init kind).
    pub options: Vec<(String, String)>,
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match &self.kind {
            ModelKind::NsvmLinear(_) => Algorithm::NsvmLinear,
            ModelKind::NsvmKernel(_) => Algorithm::NsvmKernel,
            ModelKind::Planes { algorithm, .. } => *algorithm,
        }
    }

    pub fn classes(&self) -> usize {
        match &self.kind {
            ModelKind::NsvmLinear(m) => m.classes(),
            ModelKind::NsvmKernel(m) => m.classes(),
            ModelKind::Planes { model, .. } => model.classes(),
        }
    }

    pub fn features(&self) -> usize {
        match &self.kind {
            ModelKind::NsvmLinear(m) => m.features(),
            ModelKind::NsvmKernel(m) => m.features(),
            ModelKind::Planes { model, .. } => model.features(),
        }
    }

    /// Original token for an encoded label.
    pub fn label_name(&self, label: usize) -> &str {
        &self.label_names[label - 1]
    }
}

impl Classifier for TrainedModel {
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>, Error> {
        match &self.kind {
            ModelKind::NsvmLinear(m) => m.predict(x),
            ModelKind::NsvmKernel(m) => m.predict(x),
            ModelKind::Planes { model, .. } => model.predict(x),
        }
    }
}

fn push_floats(out: &mut String, values: &[f64]) {
    for v in values {
        let _ = write!(out, " {v}");
    }
    out.push('\n');
}

/// Serialize to the text format.
pub fn to_text(model: &TrainedModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "format_version {FORMAT_VERSION}");
    let _ = writeln!(out, "algorithm {}", model.algorithm().as_str());
    let _ = writeln!(out, "classes {}", model.classes());
    let _ = writeln!(out, "features {}", model.features());
    for (name, value) in &model.hyper {
        let _ = writeln!(out, "hyper {name} {value}");
    }
    for (name, value) in &model.options {
        let _ = writeln!(out, "option {name} {value}");
    }
    for (i, token) in model.label_names.iter().enumerate() {
        let _ = writeln!(out, "label {} {token}", i + 1);
    }
    let standardizer = match &model.kind {
        ModelKind::NsvmLinear(m) => &m.standardizer,
        ModelKind::NsvmKernel(m) => &m.standardizer,
        ModelKind::Planes { model, .. } => &model.standardizer,
    };
    out.push_str("standardizer_mean");
    push_floats(&mut out, &standardizer.mean);
    out.push_str("standardizer_scale");
    push_floats(&mut out, &standardizer.scale);

    match &model.kind {
        ModelKind::NsvmLinear(m) => {
            out.push_str("degenerate");
            for &f in &m.degenerate {
                let _ = write!(out, " {}", u8::from(f));
            }
            out.push('\n');
            for b in 0..m.classes() {
                let _ = write!(out, "weights {}", b + 1);
                push_floats(&mut out, m.weights.block(b));
            }
        }
        ModelKind::NsvmKernel(m) => {
            match m.kernel {
                KernelSpec::Linear => {
                    let _ = writeln!(out, "kernel linear");
                }
                KernelSpec::Rbf { sigma } => {
                    let _ = writeln!(out, "kernel rbf {sigma}");
                }
            }
            let rule = match m.rule {
                KernelRule::NormConsistent => "norm-consistent",
                KernelRule::Literal => "literal",
            };
            let _ = writeln!(out, "kernel_rule {rule}");
            let _ = writeln!(out, "gram_ridge {}", m.gram_diag_reg);
            out.push_str("degenerate");
            for &f in &m.degenerate {
                let _ = write!(out, " {}", u8::from(f));
            }
            out.push('\n');
            let _ = writeln!(out, "train_rows {}", m.train_x.rows());
            for i in 0..m.train_x.rows() {
                out.push_str("train_row");
                push_floats(&mut out, m.train_x.row(i));
            }
            for b in 0..m.classes() {
                let _ = write!(out, "alpha {}", b + 1);
                push_floats(&mut out, m.alpha.block(b));
            }
        }
        ModelKind::Planes { model, .. } => {
            let rule = match model.rule {
                DistanceRule::NormalizedByW => "normalized",
                DistanceRule::Absolute => "absolute",
            };
            let _ = writeln!(out, "rule {rule}");
            for (i, plane) in model.planes.iter().enumerate() {
                let _ = write!(out, "plane {}", i + 1);
                push_floats(&mut out, plane);
            }
        }
    }
    out.push_str("end\n");
    out
}

/// Write atomically: serialize, write `<path>.tmp`, rename into place.
pub fn save(model: &TrainedModel, path: &Path) -> Result<(), Error> {
    let text = to_text(model);
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, Error> {
        loop {
            match self.lines.next() {
                Some((i, line)) => {
                    self.current = i + 1;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
                None => {
                    return Err(Error::ModelFormat {
                        line: self.current + 1,
                        msg: "unexpected end of file".into(),
                    })
                }
            }
        }
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, Error> {
        Err(Error::ModelFormat {
            line: self.current,
            msg: msg.into(),
        })
    }

    fn expect_keyword<'b>(&mut self, keyword: &str) -> Result<&'a str, Error>
    where
        'a: 'b,
    {
        let line = self.next()?;
        match line.strip_prefix(keyword) {
            Some(rest) if rest.is_empty() || rest.starts_with(' ') => Ok(rest.trim_start()),
            _ => self.fail(format!("expected {keyword:?}, found {line:?}")),
        }
    }

    fn parse_floats(&self, rest: &str, expected: usize) -> Result<Vec<f64>, Error> {
        let values: Result<Vec<f64>, _> = rest.split_whitespace().map(str::parse::<f64>).collect();
        match values {
            Ok(v) if v.len() == expected => Ok(v),
            Ok(v) => self.fail(format!("expected {expected} values, found {}", v.len())),
            Err(_) => self.fail("malformed number"),
        }
    }
}

/// Parse the text format.
pub fn from_text(text: &str) -> Result<TrainedModel, Error> {
    let mut lines = Lines {
        lines: text.lines().enumerate(),
        current: 0,
    };
    let magic = lines.next()?;
    if magic.trim() != MAGIC {
        return lines.fail("not a model file");
    }
    let version = lines.expect_keyword("format_version")?;
    if version.trim() != FORMAT_VERSION.to_string() {
        return lines.fail(format!("unsupported format_version {version:?}"));
    }
    let algorithm = lines.expect_keyword("algorithm")?;
    let algorithm = match Algorithm::parse(algorithm.trim()) {
        Some(a) => a,
        None => return lines.fail(format!("unknown algorithm {algorithm:?}")),
    };
    let classes: usize = lines
        .expect_keyword("classes")?
        .trim()
        .parse()
        .map_err(|_| Error::ModelFormat {
            line: lines.current,
            msg: "bad class count".into(),
        })?;
    let features: usize = lines
        .expect_keyword("features")?
        .trim()
        .parse()
        .map_err(|_| Error::ModelFormat {
            line: lines.current,
            msg: "bad feature count".into(),
        })?;
    if classes < 2 {
        return lines.fail("need at least two classes");
    }

    let mut hyper = Vec::new();
    let mut options = Vec::new();
    let mut label_names = Vec::new();
    let mut line = lines.next()?;
    while let Some(rest) = line.strip_prefix("hyper ") {
        let (name, value) = rest.split_once(' ').ok_or(Error::ModelFormat {
            line: lines.current,
            msg: "malformed hyper line".into(),
        })?;
        let value: f64 = value.trim().parse().map_err(|_| Error::ModelFormat {
            line: lines.current,
            msg: "malformed hyper value".into(),
        })?;
        hyper.push((name.to_string(), value));
        line = lines.next()?;
    }
    while let Some(rest) = line.strip_prefix("option ") {
        let (name, value) = rest.split_once(' ').ok_or(Error::ModelFormat {
            line: lines.current,
            msg: "malformed option line".into(),
        })?;
        options.push((name.to_string(), value.trim().to_string()));
        line = lines.next()?;
    }
    for expected in 1..=classes {
        let rest = match line.strip_prefix("label ") {
            Some(r) => r,
            None => return lines.fail(format!("expected label line, found {line:?}")),
        };
        let (idx, token) = rest.split_once(' ').ok_or(Error::ModelFormat {
            line: lines.current,
            msg: "malformed label line".into(),
        })?;
        if idx.parse::<usize>() != Ok(expected) {
            return lines.fail(format!("labels out of order at {rest:?}"));
        }
        label_names.push(token.to_string());
        line = lines.next()?;
    }
    let rest = match line.strip_prefix("standardizer_mean") {
        Some(r) => r,
        None => return lines.fail("expected standardizer_mean"),
    };
    let mean = lines.parse_floats(rest, features)?;
    let scale_rest = lines.expect_keyword("standardizer_scale")?;
    let scale = lines.parse_floats(scale_rest, features)?;
    let standardizer = Standardizer { mean, scale };

    let kind = match algorithm {
        Algorithm::NsvmLinear => {
            let degenerate = parse_flags(&mut lines, classes)?;
            let mut data = Vec::with_capacity(classes * (features + 1));
            for b in 1..=classes {
                let rest = lines.expect_keyword("weights")?;
                let (idx, values) = rest.split_once(' ').ok_or(Error::ModelFormat {
                    line: lines.current,
                    msg: "malformed weights line".into(),
                })?;
                if idx.parse::<usize>() != Ok(b) {
                    return lines.fail("weights blocks out of order");
                }
                data.extend(lines.parse_floats(values, features + 1)?);
            }
            ModelKind::NsvmLinear(LinearNsvmModel {
                weights: StackedWeights::from_vec(classes, features + 1, data),
                standardizer,
                degenerate,
            })
        }
        Algorithm::NsvmKernel => {
            let kernel_line = lines.expect_keyword("kernel")?;
            let kernel = if kernel_line.trim() == "linear" {
                KernelSpec::Linear
            } else if let Some(sigma) = kernel_line.trim().strip_prefix("rbf ") {
                let sigma: f64 = sigma.trim().parse().map_err(|_| Error::ModelFormat {
                    line: lines.current,
                    msg: "bad rbf sigma".into(),
                })?;
                KernelSpec::Rbf { sigma }
            } else {
                return lines.fail(format!("unknown kernel {kernel_line:?}"));
            };
            let rule = match lines.expect_keyword("kernel_rule")?.trim() {
                "norm-consistent" => KernelRule::NormConsistent,
                "literal" => KernelRule::Literal,
                other => return lines.fail(format!("unknown kernel rule {other:?}")),
            };
            let ridge: f64 = lines
                .expect_keyword("gram_ridge")?
                .trim()
                .parse()
                .map_err(|_| Error::ModelFormat {
                    line: lines.current,
                    msg: "bad gram ridge".into(),
                })?;
            let _declared = parse_flags(&mut lines, classes)?;
            let rows: usize = lines
                .expect_keyword("train_rows")?
                .trim()
                .parse()
                .map_err(|_| Error::ModelFormat {
                    line: lines.current,
                    msg: "bad train row count".into(),
                })?;
            let mut train = Matrix::zeros(rows, features);
            for i in 0..rows {
                let rest = lines.expect_keyword("train_row")?;
                let values = lines.parse_floats(rest, features)?;
                train.row_mut(i).copy_from_slice(&values);
            }
            let mut data = Vec::with_capacity(classes * rows);
            for b in 1..=classes {
                let rest = lines.expect_keyword("alpha")?;
                let (idx, values) = rest.split_once(' ').ok_or(Error::ModelFormat {
                    line: lines.current,
                    msg: "malformed alpha line".into(),
                })?;
                if idx.parse::<usize>() != Ok(b) {
                    return lines.fail("alpha blocks out of order");
                }
                data.extend(lines.parse_floats(values, rows)?);
            }
            // cached norms and degenerate flags are recomputed
            // deterministically from the reloaded coefficients
            ModelKind::NsvmKernel(KernelNsvmModel::from_parts(
                StackedWeights::from_vec(classes, rows, data),
                train,
                kernel,
                ridge,
                standardizer,
                rule,
            ))
        }
        Algorithm::Gepsvm | Algorithm::Lstsvm | Algorithm::Pcc => {
            let rule = match lines.expect_keyword("rule")?.trim() {
                "normalized" => DistanceRule::NormalizedByW,
                "absolute" => DistanceRule::Absolute,
                other => return lines.fail(format!("unknown distance rule {other:?}")),
            };
            let mut planes = Vec::with_capacity(classes);
            for b in 1..=classes {
                let rest = lines.expect_keyword("plane")?;
                let (idx, values) = rest.split_once(' ').ok_or(Error::ModelFormat {
                    line: lines.current,
                    msg: "malformed plane line".into(),
                })?;
                if idx.parse::<usize>() != Ok(b) {
                    return lines.fail("planes out of order");
                }
                planes.push(lines.parse_floats(values, features + 1)?);
            }
            ModelKind::Planes {
                algorithm,
                model: PlaneModel {
                    planes,
                    rule,
                    standardizer,
                },
            }
        }
    };
    let end = lines.next()?;
    if end.trim() != "end" {
        return lines.fail(format!("expected end marker, found {end:?}"));
    }
    Ok(TrainedModel {
        label_names,
        kind,
        hyper,
        options,
    })
}

fn parse_flags(lines: &mut Lines, expected: usize) -> Result<Vec<bool>, Error> {
    let rest = lines.expect_keyword("degenerate")?;
    let flags: Vec<bool> = rest.split_whitespace().map(|t| t == "1").collect();
    if flags.len() != expected {
        return lines.fail(format!(
            "expected {expected} degenerate flags, found {}",
            flags.len()
        ));
    }
    Ok(flags)
}

/// Load from disk.
pub fn load(path: &Path) -> Result<TrainedModel, Error> {
    let text = fs::read_to_string(path)?;
    from_text(&text)
}
