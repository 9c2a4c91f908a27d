//! C ABI for the nsvm toolkit.
//!
//! Everything crosses the boundary through opaque handles
//! ([`NsvmDataset`], [`NsvmModel`]) and [`NsvmStatus`] codes; the last
//! error's message is kept per thread and retrievable with
//! [`nsvm_last_error_message`]. No function panics across the boundary.
//!
//! The matching C header lives at `include/nsvm.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use nsvm::dataset::Dataset;
use nsvm::error::Error;
use nsvm::eval::Classifier;
use nsvm::kernel::KernelSpec;
use nsvm::linalg::Matrix;
use nsvm::model::{Algorithm, ModelKind, TrainedModel};
use nsvm::mpdca::{DescentPolicy, InitKind, NsvmConfig, UpdateRule};
use nsvm::{baselines, nsvm_kernel, nsvm_linear};

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NsvmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    NumericalFailure = 4,
    IoError = 5,
    Utf8Error = 6,
    Panic = 7,
}

/// Kernel kinds for [`nsvm_train_kernel`].
pub const NSVM_KERNEL_LINEAR: u32 = 0;
pub const NSVM_KERNEL_RBF: u32 = 1;

/// Opaque dataset handle.
pub struct NsvmDataset(Dataset);

/// Opaque trained-model handle.
pub struct NsvmModel(TrainedModel);

/// Training options for the two NSVM solvers. Start from
/// [`nsvm_train_options_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NsvmTrainOptions {
    pub c1: f64,
    pub c2: f64,
    pub l: f64,
    pub tol: f64,
    pub max_iter: u32,
    pub restart_period: u32,
    pub seed: u64,
    /// 0 = stationary-exact update, 1 = doubled closed-form variant.
    pub update_rule: u32,
    /// 0 = class-planes warm start, 1 = seeded random.
    pub init: u32,
    /// Nonzero aborts training if the descent quantity ever increases.
    pub enforce_descent: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(err: &Error) -> NsvmStatus {
    match err {
        Error::Io(_) => NsvmStatus::IoError,
        Error::Parse { .. } | Error::ModelFormat { .. } => NsvmStatus::ParseError,
        Error::NumericalFailure(_) => NsvmStatus::NumericalFailure,
        Error::Linalg(_) => NsvmStatus::NumericalFailure,
        Error::CvFold { source, .. } => status_of(source),
        _ => NsvmStatus::InvalidArgument,
    }
}

fn fail(err: Error) -> NsvmStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn guard(f: impl FnOnce() -> NsvmStatus + std::panic::UnwindSafe) -> NsvmStatus {
    match catch_unwind(f) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            NsvmStatus::Panic
        }
    }
}

unsafe fn path_from(ptr: *const c_char) -> Result<PathBuf, NsvmStatus> {
    if ptr.is_null() {
        set_error("null path");
        return Err(NsvmStatus::NullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(NsvmStatus::Utf8Error)
        }
    }
}

/// Copy the last error message (empty when no error has occurred on this
/// thread). Returns the full message length in bytes excluding the
/// terminator; the buffer is always NUL-terminated when `cap > 0`.
///
/// # Safety
/// `buf` must have room for `cap` bytes when nonnull.
#[no_mangle]
pub unsafe extern "C" fn nsvm_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nsvm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default training options.
#[no_mangle]
pub extern "C" fn nsvm_train_options_default() -> NsvmTrainOptions {
    let cfg = NsvmConfig::default();
    NsvmTrainOptions {
        c1: cfg.c1,
        c2: cfg.c2,
        l: cfg.l,
        tol: cfg.tol,
        max_iter: cfg.max_iter as u32,
        restart_period: cfg.restart_period as u32,
        seed: cfg.seed,
        update_rule: 0,
        init: 0,
        enforce_descent: 0,
    }
}

fn config_from(opts: &NsvmTrainOptions) -> Result<NsvmConfig, Error> {
    Ok(NsvmConfig {
        c1: opts.c1,
        c2: opts.c2,
        l: opts.l,
        tol: opts.tol,
        max_iter: opts.max_iter as usize,
        restart_period: opts.restart_period as usize,
        seed: opts.seed,
        update_rule: match opts.update_rule {
            0 => UpdateRule::StationaryExact,
            1 => UpdateRule::Doubled,
            other => return Err(Error::BadConfig(format!("unknown update rule {other}"))),
        },
        init: match opts.init {
            0 => InitKind::ClassPlanes,
            1 => InitKind::Random,
            other => return Err(Error::BadConfig(format!("unknown init kind {other}"))),
        },
        descent_policy: if opts.enforce_descent != 0 {
            DescentPolicy::Enforce
        } else {
            DescentPolicy::Record
        },
    })
}

/// Build a dataset from a dense row-major matrix and one numeric label per
/// row. Labels may be any values; they are encoded by sorted distinct value.
///
/// # Safety
/// `x` must point to `rows * cols` doubles and `labels` to `rows` values;
/// `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_create(
    x: *const f64,
    rows: usize,
    cols: usize,
    labels: *const u32,
    out: *mut *mut NsvmDataset,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if x.is_null() || labels.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let values = unsafe { std::slice::from_raw_parts(x, rows * cols) };
        let raw_labels = unsafe { std::slice::from_raw_parts(labels, rows) };
        let matrix_rows: Vec<Vec<f64>> = (0..rows)
            .map(|i| values[i * cols..(i + 1) * cols].to_vec())
            .collect();
        let tokens: Vec<String> = raw_labels.iter().map(|l| l.to_string()).collect();
        match Dataset::from_labeled_rows(matrix_rows, tokens) {
            Ok(d) => {
                unsafe { *out = Box::into_raw(Box::new(NsvmDataset(d))) };
                NsvmStatus::Ok
            }
            Err(e) => fail(e),
        }
    }))
}

/// Load a CSV data file (final column is the label token).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_load_csv(
    path: *const c_char,
    has_header: bool,
    out: *mut *mut NsvmDataset,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null output pointer");
            return NsvmStatus::NullPointer;
        }
        let path = match unsafe { path_from(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match nsvm::dataset::load_csv(&path, has_header) {
            Ok(d) => {
                unsafe { *out = Box::into_raw(Box::new(NsvmDataset(d))) };
                NsvmStatus::Ok
            }
            Err(e) => fail(e),
        }
    }))
}

/// Load a libsvm-format data file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_load_libsvm(
    path: *const c_char,
    out: *mut *mut NsvmDataset,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null output pointer");
            return NsvmStatus::NullPointer;
        }
        let path = match unsafe { path_from(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match nsvm::dataset::load_libsvm(&path) {
            Ok(d) => {
                unsafe { *out = Box::into_raw(Box::new(NsvmDataset(d))) };
                NsvmStatus::Ok
            }
            Err(e) => fail(e),
        }
    }))
}

/// # Safety
/// `ds` must have come from a dataset constructor and not been freed.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_free(ds: *mut NsvmDataset) {
    if !ds.is_null() {
        drop(unsafe { Box::from_raw(ds) });
    }
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_rows(ds: *const NsvmDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { &*ds }.0.samples()
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_cols(ds: *const NsvmDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { &*ds }.0.features()
}

/// # Safety
/// `ds` must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nsvm_dataset_classes(ds: *const NsvmDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    unsafe { &*ds }.0.classes()
}

fn wrap_model(model: TrainedModel, out: *mut *mut NsvmModel) -> NsvmStatus {
    unsafe { *out = Box::into_raw(Box::new(NsvmModel(model))) };
    NsvmStatus::Ok
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

fn nsvm_option_strings(cfg: &NsvmConfig) -> Vec<(String, String)> {
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

/// Train the linear max-min distance NSVM.
///
/// # Safety
/// `ds` must be a live dataset handle; `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_train_linear(
    ds: *const NsvmDataset,
    opts: *const NsvmTrainOptions,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if ds.is_null() || opts.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let d = &unsafe { &*ds }.0;
        let cfg = match config_from(unsafe { &*opts }) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match nsvm_linear::train_linear(d, &cfg) {
            Ok((m, _)) => wrap_model(
                TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::NsvmLinear(m),
                    hyper: nsvm_hyper(&cfg),
                    options: nsvm_option_strings(&cfg),
                },
                out,
            ),
            Err(e) => fail(e),
        }
    }))
}

/// Train the kernel max-min distance NSVM. `kernel_kind` 0 is linear,
/// 1 is RBF with length scale `sigma`.
///
/// # Safety
/// `ds` must be a live dataset handle; `opts` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_train_kernel(
    ds: *const NsvmDataset,
    opts: *const NsvmTrainOptions,
    kernel_kind: u32,
    sigma: f64,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if ds.is_null() || opts.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let d = &unsafe { &*ds }.0;
        let cfg = match config_from(unsafe { &*opts }) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let spec = match kernel_kind {
            0 => KernelSpec::Linear,
            1 => KernelSpec::Rbf { sigma },
            other => {
                return fail(Error::BadConfig(format!("unknown kernel kind {other}")));
            }
        };
        match nsvm_kernel::train_kernel(d, spec, &cfg) {
            Ok((m, _)) => {
                let mut hyper = nsvm_hyper(&cfg);
                if let KernelSpec::Rbf { sigma } = spec {
                    hyper.push(("sigma".into(), sigma));
                }
                wrap_model(
                    TrainedModel {
                        label_names: d.label_names().to_vec(),
                        kind: ModelKind::NsvmKernel(m),
                        hyper,
                        options: nsvm_option_strings(&cfg),
                    },
                    out,
                )
            }
            Err(e) => fail(e),
        }
    }))
}

/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_train_gepsvm(
    ds: *const NsvmDataset,
    delta: f64,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if ds.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let d = &unsafe { &*ds }.0;
        match baselines::train_gepsvm(d, delta) {
            Ok(m) => wrap_model(
                TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::Planes {
                        algorithm: Algorithm::Gepsvm,
                        model: m,
                    },
                    hyper: vec![("delta".into(), delta)],
                    options: vec![],
                },
                out,
            ),
            Err(e) => fail(e),
        }
    }))
}

/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_train_lstsvm(
    ds: *const NsvmDataset,
    lambda: f64,
    delta: f64,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if ds.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let d = &unsafe { &*ds }.0;
        match baselines::train_lstsvm(d, lambda, delta) {
            Ok(m) => wrap_model(
                TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::Planes {
                        algorithm: Algorithm::Lstsvm,
                        model: m,
                    },
                    hyper: vec![("lambda".into(), lambda), ("delta".into(), delta)],
                    options: vec![],
                },
                out,
            ),
            Err(e) => fail(e),
        }
    }))
}

/// # Safety
/// `ds` must be a live dataset handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_train_pcc(
    ds: *const NsvmDataset,
    nu: f64,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if ds.is_null() || out.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let d = &unsafe { &*ds }.0;
        match baselines::train_pcc(d, nu) {
            Ok(m) => wrap_model(
                TrainedModel {
                    label_names: d.label_names().to_vec(),
                    kind: ModelKind::Planes {
                        algorithm: Algorithm::Pcc,
                        model: m,
                    },
                    hyper: vec![("nu".into(), nu)],
                    options: vec![],
                },
                out,
            ),
            Err(e) => fail(e),
        }
    }))
}

/// # Safety
/// `model` must have come from a trainer or loader and not been freed.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_free(model: *mut NsvmModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_classes(model: *const NsvmModel) -> usize {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.0.classes()
}

/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_features(model: *const NsvmModel) -> usize {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.0.features()
}

/// Predict encoded labels (1..=classes) for `rows` dense row-major samples.
///
/// # Safety
/// `model` must be live; `x` must point to `rows * cols` doubles;
/// `out_labels` must have room for `rows` values.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_predict(
    model: *const NsvmModel,
    x: *const f64,
    rows: usize,
    cols: usize,
    out_labels: *mut u32,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if model.is_null() || x.is_null() || out_labels.is_null() {
            set_error("null pointer argument");
            return NsvmStatus::NullPointer;
        }
        let m = &unsafe { &*model }.0;
        if cols != m.features() {
            return fail(Error::DimensionMismatch {
                expected: m.features(),
                found: cols,
            });
        }
        let values = unsafe { std::slice::from_raw_parts(x, rows * cols) };
        let matrix = Matrix::from_fn(rows, cols, |i, j| values[i * cols + j]);
        match m.predict(&matrix) {
            Ok(pred) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out_labels, rows) };
                for (slot, label) in out.iter_mut().zip(pred) {
                    *slot = label as u32;
                }
                NsvmStatus::Ok
            }
            Err(e) => fail(e),
        }
    }))
}

/// Copy the original token of an encoded label. Returns the token length
/// in bytes excluding the terminator, or 0 for an invalid label.
///
/// # Safety
/// `model` must be live; `buf` must have room for `cap` bytes when nonnull.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_label_name(
    model: *const NsvmModel,
    label: u32,
    buf: *mut c_char,
    cap: usize,
) -> usize {
    if model.is_null() {
        return 0;
    }
    let m = &unsafe { &*model }.0;
    let label = label as usize;
    if label < 1 || label > m.classes() {
        return 0;
    }
    let token = m.label_name(label).as_bytes();
    if !buf.is_null() && cap > 0 {
        let n = token.len().min(cap - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(token.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
    }
    token.len()
}

/// Save a model to the text model-file format.
///
/// # Safety
/// `model` must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_save(
    model: *const NsvmModel,
    path: *const c_char,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if model.is_null() {
            set_error("null model");
            return NsvmStatus::NullPointer;
        }
        let path = match unsafe { path_from(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match nsvm::model::save(&unsafe { &*model }.0, &path) {
            Ok(()) => NsvmStatus::Ok,
            Err(e) => fail(e),
        }
    }))
}

/// Load a model from the text model-file format.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn nsvm_model_load(
    path: *const c_char,
    out: *mut *mut NsvmModel,
) -> NsvmStatus {
    guard(AssertUnwindSafe(|| {
        if out.is_null() {
            set_error("null output pointer");
            return NsvmStatus::NullPointer;
        }
        let path = match unsafe { path_from(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match nsvm::model::load(&path) {
            Ok(m) => wrap_model(m, out),
            Err(e) => fail(e),
        }
    }))
}
