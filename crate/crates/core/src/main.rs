//! Command-line harness: generate synthetic data, train, predict, and
//! cross-validate (optionally with a grid search).
//!
//! Exit codes: 0 on success, 2 on invalid input or flags, 3 on numerical
//! failure inside a solver.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nsvm::dataset::{self, Dataset};
use nsvm::error::Error;
use nsvm::eval::{self, Classifier, CvReport, GridSpec};
use nsvm::kernel::KernelSpec;
use nsvm::linalg::Matrix;
use nsvm::model::{self, Algorithm, ModelKind, TrainedModel};
use nsvm::mpdca::{DescentPolicy, InitKind, NsvmConfig, UpdateRule};
use nsvm::{baselines, nsvm_kernel, nsvm_linear};

#[derive(Parser)]
#[command(name = "nsvm", version, about = "Nonparallel-hyperplane SVM toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Train a model and write it to a model file.
    Train(TrainArgs),
    /// Predict labels for a data file with a saved model.
    Predict(PredictArgs),
    /// Cross-validate, optionally grid-searching hyperparameters.
    Cv(CvArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenDataset {
    CrossPlanes,
    Xor,
}

#[derive(Args)]
struct GenArgs {
    /// Which synthetic set to generate.
    #[arg(long, value_enum)]
    dataset: GenDataset,
    /// Samples per class (cross-planes only).
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    /// Perpendicular Gaussian noise standard deviation (cross-planes only).
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Fraction of each class re-drawn uniformly as outliers (cross-planes only).
    #[arg(long, default_value_t = 0.05)]
    outliers: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Csv,
    Libsvm,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoFlag {
    /// Linear max-min distance NSVM.
    Nsvm,
    /// Kernel max-min distance NSVM.
    NsvmKernel,
    Gepsvm,
    Lstsvm,
    Pcc,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelFlag {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, ValueEnum)]
enum UpdateRuleFlag {
    /// Solve the subproblem's stationarity system exactly.
    Stationary,
    /// The doubled closed-form variant, kept for comparison.
    Doubled,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitFlag {
    /// Deterministic per-class proximal-plane warm start.
    ClassPlanes,
    /// Seeded uniform(-0.5, 0.5) coordinates.
    Random,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
    format: DataFormat,
    /// Skip one CSV header line.
    #[arg(long, default_value_t = false)]
    has_header: bool,
}

#[derive(Args)]
struct HyperArgs {
    /// Own-class response weight (nsvm, nsvm-kernel).
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Max-min loss weight (nsvm, nsvm-kernel).
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Proximal parameter (nsvm, nsvm-kernel).
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Extrapolation restart period.
    #[arg(long, default_value_t = 50)]
    restart: usize,
    #[arg(long, value_enum, default_value_t = UpdateRuleFlag::Stationary)]
    update_rule: UpdateRuleFlag,
    #[arg(long, value_enum, default_value_t = InitFlag::ClassPlanes)]
    init: InitFlag,
    /// Abort training if the descent quantity ever increases.
    #[arg(long, default_value_t = false)]
    enforce_descent: bool,
    #[arg(long, value_enum, default_value_t = KernelFlag::Rbf)]
    kernel: KernelFlag,
    /// RBF length scale (nsvm-kernel).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// GEPSVM or LSTSVM regularization.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// LSTSVM Tikhonov weight.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// PCC trade-off.
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    algo: AlgoFlag,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    algo: AlgoFlag,
    #[command(flatten)]
    hyper: HyperArgs,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `none` (use the given parameters), `default` (the full power-of-two
    /// grid per axis), or a custom spec like `c1:0.25,1,4;c2:0.25,1,4`.
    #[arg(long, default_value = "none")]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Cv(args) => cmd_cv(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let numerical = match &e {
                Error::NumericalFailure(_) => true,
                Error::CvFold { source, .. } => matches!(**source, Error::NumericalFailure(_)),
                _ => false,
            };
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<(), Error> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), Error> {
    let d = match args.dataset {
        GenDataset::CrossPlanes => {
            dataset::gen_cross_planes(args.per_class, args.noise, args.outliers, args.seed)?
        }
        GenDataset::Xor => dataset::gen_xor(),
    };
    let mut out = String::new();
    for i in 0..d.samples() {
        for v in d.x().row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", d.label_name(d.y()[i]));
    }
    write_atomic(&args.out, &out)?;
    println!(
        "wrote {} samples, {} classes to {}",
        d.samples(),
        d.classes(),
        args.out.display()
    );
    Ok(())
}

fn load_dataset(args: &DataArgs) -> Result<Dataset, Error> {
    match args.format {
        DataFormat::Csv => dataset::load_csv(&args.data, args.has_header),
        DataFormat::Libsvm => dataset::load_libsvm(&args.data),
    }
}

fn load_features(args: &DataArgs) -> Result<Matrix, Error> {
    let (rows, _tokens) = match args.format {
        DataFormat::Csv => dataset::load_csv_rows(&args.data, args.has_header)?,
        DataFormat::Libsvm => dataset::load_libsvm_rows(&args.data)?,
    };
    Ok(Matrix::from_rows(&rows))
}

fn nsvm_config(hyper: &HyperArgs, seed: u64) -> NsvmConfig {
    NsvmConfig {
        c1: hyper.c1,
        c2: hyper.c2,
        l: hyper.l,
        max_iter: hyper.max_iter,
        tol: hyper.tol,
        restart_period: hyper.restart,
        seed,
        update_rule: match hyper.update_rule {
            UpdateRuleFlag::Stationary => UpdateRule::StationaryExact,
            UpdateRuleFlag::Doubled => UpdateRule::Doubled,
        },
        init: match hyper.init {
            InitFlag::ClassPlanes => InitKind::ClassPlanes,
            InitFlag::Random => InitKind::Random,
        },
        descent_policy: if hyper.enforce_descent {
            DescentPolicy::Enforce
        } else {
            DescentPolicy::Record
        },
    }
}

fn kernel_spec(hyper: &HyperArgs) -> KernelSpec {
    match hyper.kernel {
        KernelFlag::Linear => KernelSpec::Linear,
        KernelFlag::Rbf => KernelSpec::Rbf { sigma: hyper.sigma },
    }
}

fn nsvm_options(cfg: &NsvmConfig) -> Vec<(String, String)> {
    vec![
        (
            "update_rule".into(),
            match cfg.update_rule {
                UpdateRule::StationaryExact => "stationary".into(),
                UpdateRule::Doubled => "doubled".into(),
            },
        ),
        (
            "init".into(),
            match cfg.init {
                InitKind::ClassPlanes => "class-planes".into(),
                InitKind::Random => "random".into(),
            },
        ),
    ]
}

fn nsvm_hyper(cfg: &NsvmConfig) -> Vec<(String, f64)> {
    vec![
        ("c1".into(), cfg.c1),
        ("c2".into(), cfg.c2),
        ("L".into(), cfg.l),
        ("max_iter".into(), cfg.max_iter as f64),
        ("tol".into(), cfg.tol),
        ("restart".into(), cfg.restart_period as f64),
        ("seed".into(), cfg.seed as f64),
    ]
}

struct TrainSummary {
    model: TrainedModel,
    iterations: Option<usize>,
    final_step: Option<f64>,
}

fn train_model(
    d: &Dataset,
    algo: AlgoFlag,
    hyper: &HyperArgs,
    seed: u64,
) -> Result<TrainSummary, Error> {
    Ok(match algo {
        AlgoFlag::Nsvm => {
            let cfg = nsvm_config(hyper, seed);
            let (m, trace) = nsvm_linear::train_linear(d, &cfg)?;
            TrainSummary {
                model: TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::NsvmLinear(m),
                    hyper: nsvm_hyper(&cfg),
                    options: nsvm_options(&cfg),
                },
                iterations: Some(trace.len()),
                final_step: Some(trace.final_step_norm),
            }
        }
        AlgoFlag::NsvmKernel => {
            let cfg = nsvm_config(hyper, seed);
            let spec = kernel_spec(hyper);
            let (m, trace) = nsvm_kernel::train_kernel(d, spec, &cfg)?;
            let mut h = nsvm_hyper(&cfg);
            if let KernelSpec::Rbf { sigma } = spec {
                h.push(("sigma".into(), sigma));
            }
            TrainSummary {
                model: TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::NsvmKernel(m),
                    hyper: h,
                    options: nsvm_options(&cfg),
                },
                iterations: Some(trace.len()),
                final_step: Some(trace.final_step_norm),
            }
        }
        AlgoFlag::Gepsvm => TrainSummary {
            model: TrainedModel {
                label_names: d.label_names().to_vec(),
                kind: ModelKind::Planes {
                    algorithm: Algorithm::Gepsvm,
                    model: baselines::train_gepsvm(d, hyper.delta)?,
                },
                hyper: vec![("delta".into(), hyper.delta)],
                options: vec![],
            },
            iterations: None,
            final_step: None,
        },
        AlgoFlag::Lstsvm => TrainSummary {
            model: TrainedModel {
                label_names: d.label_names().to_vec(),
                kind: ModelKind::Planes {
                    algorithm: Algorithm::Lstsvm,
                    model: baselines::train_lstsvm(d, hyper.lambda, hyper.delta)?,
                },
                hyper: vec![
                    ("lambda".into(), hyper.lambda),
                    ("delta".into(), hyper.delta),
                ],
                options: vec![],
            },
            iterations: None,
            final_step: None,
        },
        AlgoFlag::Pcc => TrainSummary {
            model: TrainedModel {
                label_names: d.label_names().to_vec(),
                kind: ModelKind::Planes {
                    algorithm: Algorithm::Pcc,
                    model: baselines::train_pcc(d, hyper.nu)?,
                },
                hyper: vec![("nu".into(), hyper.nu)],
                options: vec![],
            },
            iterations: None,
            final_step: None,
        },
    })
}

fn cmd_train(args: TrainArgs) -> Result<(), Error> {
    let d = load_dataset(&args.data)?;
    let started = Instant::now();
    let summary = train_model(&d, args.algo, &args.hyper, args.seed)?;
    let wall = started.elapsed().as_secs_f64();
    let pred = summary.model.predict(d.x())?;
    let acc = eval::accuracy(d.y(), &pred)?;
    model::save(&summary.model, &args.out)?;
    let mut line = format!(
        "trained {}: train_accuracy={acc:.4}",
        summary.model.algorithm().as_str()
    );
    if let Some(iters) = summary.iterations {
        let _ = write!(line, " iterations={iters}");
    }
    if let Some(step) = summary.final_step {
        let _ = write!(line, " final_step_norm={step:.3e}");
    }
    let _ = write!(line, " wall_time_s={wall:.3}");
    println!("{line}");
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), Error> {
    let model = model::load(&args.model)?;
    let x = load_features(&args.data)?;
    if x.cols() != model.features() {
        return Err(Error::DimensionMismatch {
            expected: model.features(),
            found: x.cols(),
        });
    }
    let pred = model.predict(&x)?;
    let mut out = String::from("index,predicted_label\n");
    for (i, label) in pred.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", model.label_name(*label));
    }
    write_atomic(&args.out, &out)?;
    println!("wrote {} predictions to {}", pred.len(), args.out.display());
    Ok(())
}

/// Axes searched per algorithm, in declaration order.
fn grid_axes(algo: AlgoFlag) -> Vec<&'static str> {
    match algo {
        AlgoFlag::Nsvm => vec!["c1", "c2"],
        AlgoFlag::NsvmKernel => vec!["c1", "c2", "sigma"],
        AlgoFlag::Gepsvm => vec!["delta"],
        AlgoFlag::Lstsvm => vec!["lambda", "delta"],
        AlgoFlag::Pcc => vec!["nu"],
    }
}

fn parse_grid(algo: AlgoFlag, spec: &str) -> Result<Option<GridSpec>, Error> {
    let names = grid_axes(algo);
    match spec {
        "none" => Ok(None),
        "default" => Ok(Some(GridSpec::new(
            names
                .iter()
                .map(|n| (n.to_string(), GridSpec::default_axis()))
                .collect(),
        )?)),
        custom => {
            let mut axes = Vec::new();
            for part in custom.split(';') {
                let (name, values) = part.split_once(':').ok_or_else(|| {
                    Error::BadParams(format!("grid axis {part:?} must look like name:v1,v2"))
                })?;
                if !names.contains(&name) {
                    return Err(Error::BadParams(format!(
                        "unknown grid axis {name:?} for this algorithm; expected one of {names:?}"
                    )));
                }
                let values: Result<Vec<f64>, _> =
                    values.split(',').map(|v| v.trim().parse::<f64>()).collect();
                let values =
                    values.map_err(|_| Error::BadParams(format!("bad grid values in {part:?}")))?;
                axes.push((name.to_string(), values));
            }
            Ok(Some(GridSpec::new(axes)?))
        }
    }
}

fn hyper_with_cell(base: &HyperArgs, names: &[&str], cell: &[f64]) -> HyperArgs {
    let mut h = HyperArgs {
        c1: base.c1,
        c2: base.c2,
        l: base.l,
        max_iter: base.max_iter,
        tol: base.tol,
        restart: base.restart,
        update_rule: base.update_rule,
        init: base.init,
        enforce_descent: base.enforce_descent,
        kernel: base.kernel,
        sigma: base.sigma,
        delta: base.delta,
        lambda: base.lambda,
        nu: base.nu,
    };
    for (name, &value) in names.iter().zip(cell) {
        match *name {
            "c1" => h.c1 = value,
            "c2" => h.c2 = value,
            "sigma" => h.sigma = value,
            "delta" => h.delta = value,
            "lambda" => h.lambda = value,
            "nu" => h.nu = value,
            _ => unreachable!("axis names are fixed per algorithm"),
        }
    }
    h
}

fn cmd_cv(args: CvArgs) -> Result<(), Error> {
    let d = load_dataset(&args.data)?;
    let started = Instant::now();
    let grid = parse_grid(args.algo, &args.grid)?;
    let names = grid_axes(args.algo);
    let (report, best): (CvReport, Option<Vec<(String, f64)>>) = match &grid {
        None => {
            let report = eval::cross_validate(
                |split| Ok(train_model(split, args.algo, &args.hyper, args.seed)?.model),
                &d,
                args.folds,
                args.seed,
            )?;
            (report, None)
        }
        Some(grid) => {
            let outcome = eval::grid_search(
                |cell, split| {
                    let h = hyper_with_cell(&args.hyper, &names, cell);
                    Ok(train_model(split, args.algo, &h, args.seed)?.model)
                },
                &d,
                grid,
                args.folds,
                args.seed,
            )?;
            let best = outcome.report.chosen_params.clone();
            (outcome.report, best)
        }
    };
    let wall = started.elapsed().as_secs_f64();

    let mut out = String::new();
    let _ = writeln!(out, "nsvm-report");
    let _ = writeln!(out, "format_version 1");
    let _ = writeln!(
        out,
        "algorithm {}",
        match args.algo {
            AlgoFlag::Nsvm => "nsvm",
            AlgoFlag::NsvmKernel => "nsvm-kernel",
            AlgoFlag::Gepsvm => "gepsvm",
            AlgoFlag::Lstsvm => "lstsvm",
            AlgoFlag::Pcc => "pcc",
        }
    );
    let _ = writeln!(out, "data {}", args.data.data.display());
    let _ = writeln!(out, "folds {}", args.folds);
    let _ = writeln!(out, "seed {}", args.seed);
    if let Some(grid) = &grid {
        for (name, values) in &grid.axes {
            let _ = write!(out, "grid {name}");
            for v in values {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
    }
    if let Some(best) = &best {
        for (name, value) in best {
            let _ = writeln!(out, "best {name} {value}");
        }
    }
    out.push_str("fold_accuracy");
    for a in &report.fold_accuracies {
        let _ = write!(out, " {a}");
    }
    out.push('\n');
    let _ = writeln!(out, "mean_accuracy {}", report.mean);
    let _ = writeln!(out, "std_accuracy {}", report.std);
    out.push_str("fold_wall_time_s");
    for t in &report.fold_seconds {
        let _ = write!(out, " {t:.4}");
    }
    out.push('\n');
    let _ = writeln!(out, "wall_time_s {wall:.3}");
    out.push_str("end\n");
    write_atomic(&args.out, &out)?;

    let mut line = format!(
        "cv {} folds={} seed={}: AC={:.4} Std={:.4}",
        args.data.data.display(),
        args.folds,
        args.seed,
        report.mean,
        report.std
    );
    if let Some(best) = &best {
        let cells: Vec<String> = best.iter().map(|(n, v)| format!("{n}={v}")).collect();
        let _ = write!(line, " best[{}]", cells.join(", "));
    }
    println!("{line}");
    println!("report written to {}", args.out.display());
    Ok(())
}
