//! C ABI over `fex-core`.
//!
//! Every fallible call returns a [`FexStatus`]. On failure the message is kept
//! per thread and can be read with [`fex_last_error_message`]. Objects are
//! passed as opaque pointers and released with the matching `_free` call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use fex::error::FexError;
use fex::eval::mc_relative_l2;
use fex::expr::{Expression, ExpressionRecord};
use fex::pde::{PdeProblem, ProblemOverrides};
use fex::search::{run_search, RunConfig, RunOptions, SearchOutcome};
use fex::transnet::{build_tn_operator, TnFit, TnOperator, TnTarget};

/// Result codes shared by all entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Numeric = 5,
    Io = 6,
    Checkpoint = 7,
    EmptyPool = 8,
    Panic = 9,
}

/// Fitted one-dimensional TN operator.
pub struct FexTnOperator(TnOperator);

/// Expression with fixed parameters.
pub struct FexExpression(Expression);

/// PDE benchmark problem.
pub struct FexProblem(PdeProblem);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &FexError) -> FexStatus {
    match e {
        FexError::UnsupportedDepth(_)
        | FexError::UnknownOperator(_)
        | FexError::OperatorKind { .. }
        | FexError::Dimension { .. }
        | FexError::UnknownProblem(_)
        | FexError::UnknownPool(_)
        | FexError::Config(_) => FexStatus::Config,
        FexError::NonFinite(_) | FexError::Factorization(_) | FexError::ZeroReference => FexStatus::Numeric,
        FexError::EmptyPool => FexStatus::EmptyPool,
        FexError::Checkpoint(_) => FexStatus::Checkpoint,
        FexError::Io { .. } | FexError::Json { .. } => FexStatus::Io,
    }
}

struct Fail(FexStatus, String);

impl From<FexError> for Fail {
    fn from(e: FexError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(FexStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FexStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            FexStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(FexStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(FexStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(FexStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(Fail(FexStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn check_dim(got: usize, expected: usize) -> Result<(), Fail> {
    if got != expected {
        return Err(invalid(format!("point has length {got}, expected {expected}")));
    }
    Ok(())
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn fex_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fex_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Fits `TN[tag]` on `[lo, hi]` with `neurons` hidden units, shape `gamma` and
/// `samples` fit points.
///
/// # Safety
/// `tag` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fex_tn_build(
    tag: *const c_char,
    lo: f64,
    hi: f64,
    neurons: usize,
    gamma: f64,
    samples: usize,
    seed: u64,
    out: *mut *mut FexTnOperator,
) -> FexStatus {
    guard(|| {
        let tag = str_arg(tag, "tag")?;
        let out = out_arg(out, "out")?;
        let target = TnTarget::parse(tag).ok_or_else(|| invalid(format!("unknown TN target `{tag}`")))?;
        let fit = TnFit {
            domain: (lo, hi),
            neurons,
            gamma,
            samples,
        };
        let mut rng = fex::rng::stream(seed, fex::rng::Purpose::TnFit, 0);
        let op = build_tn_operator(tag, |x| target.eval(x), fit, &mut rng)?;
        *out = Box::into_raw(Box::new(FexTnOperator(op)));
        Ok(())
    })
}

/// Writes `[f, f', f'', f''']` at `y` into `derivs_out` (4 doubles).
///
/// # Safety
/// `op` must come from [`fex_tn_build`]; `derivs_out` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn fex_tn_derivs(op: *const FexTnOperator, y: f64, derivs_out: *mut f64) -> FexStatus {
    guard(|| {
        let op = ref_arg(op, "op")?;
        if derivs_out.is_null() {
            return Err(Fail(FexStatus::NullPointer, "derivs_out is null".into()));
        }
        let d = op.0.derivs(y);
        std::slice::from_raw_parts_mut(derivs_out, 4).copy_from_slice(&d);
        Ok(())
    })
}

/// Sup-norm fit error measured after fitting.
///
/// # Safety
/// `op` must come from [`fex_tn_build`]; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_tn_fit_sup_error(op: *const FexTnOperator, out: *mut f64) -> FexStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(op, "op")?.0.fit_sup_error;
        Ok(())
    })
}

/// # Safety
/// `op` must come from [`fex_tn_build`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fex_tn_free(op: *mut FexTnOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Loads an expression from its JSON export. Accepts either a bare
/// expression record or a `best_expression.json` file body.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_from_json(json: *const c_char, out: *mut *mut FexExpression) -> FexStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Fail(FexStatus::Config, format!("invalid JSON: {e}")))?;
        if let Some(inner) = value.get_mut("expression") {
            value = inner.take();
        }
        let rec: ExpressionRecord =
            serde_json::from_value(value).map_err(|e| Fail(FexStatus::Config, format!("invalid expression: {e}")))?;
        *out = Box::into_raw(Box::new(FexExpression(Expression::from_record(&rec)?)));
        Ok(())
    })
}

/// # Safety
/// `expr` must come from this library; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_dim(expr: *const FexExpression, out: *mut usize) -> FexStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(expr, "expr")?.0.dim();
        Ok(())
    })
}

/// Value at the point `x` of length `len`.
///
/// # Safety
/// `x` must hold `len` doubles; `expr` and `value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_eval(
    expr: *const FexExpression,
    x: *const f64,
    len: usize,
    value: *mut f64,
) -> FexStatus {
    guard(|| {
        let e = &ref_arg(expr, "expr")?.0;
        let x = slice_arg(x, len, "x")?;
        let value = out_arg(value, "value")?;
        check_dim(len, e.dim())?;
        *value = e.value(x).map_err(|err| Fail(FexStatus::Domain, err.to_string()))?;
        Ok(())
    })
}

/// Value, gradient (`len` doubles) and Laplacian at `x`.
///
/// # Safety
/// `x` and `grad` must hold `len` doubles; the other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_jet(
    expr: *const FexExpression,
    x: *const f64,
    len: usize,
    value: *mut f64,
    grad: *mut f64,
    lap: *mut f64,
) -> FexStatus {
    guard(|| {
        let e = &ref_arg(expr, "expr")?.0;
        let x = slice_arg(x, len, "x")?;
        let value = out_arg(value, "value")?;
        let lap = out_arg(lap, "lap")?;
        if grad.is_null() {
            return Err(Fail(FexStatus::NullPointer, "grad is null".into()));
        }
        check_dim(len, e.dim())?;
        let j = e.jet(x).map_err(|err| Fail(FexStatus::Domain, err.to_string()))?;
        *value = j.value;
        *lap = j.lap;
        std::slice::from_raw_parts_mut(grad, len).copy_from_slice(&j.grad);
        Ok(())
    })
}

/// Human-readable form with `precision` decimals. Free with [`fex_string_free`].
///
/// # Safety
/// `expr` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_render(
    expr: *const FexExpression,
    precision: usize,
    out: *mut *mut c_char,
) -> FexStatus {
    guard(|| {
        let s = ref_arg(expr, "expr")?.0.render(precision);
        let out = out_arg(out, "out")?;
        *out = CString::new(s).map_err(|_| invalid("rendered text contains NUL"))?.into_raw();
        Ok(())
    })
}

/// # Safety
/// `expr` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fex_expression_free(expr: *mut FexExpression) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Creates a named benchmark problem. `dim == 0` keeps the default dimension.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fex_problem_new(name: *const c_char, dim: usize, out: *mut *mut FexProblem) -> FexStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let out = out_arg(out, "out")?;
        let ov = ProblemOverrides {
            dim: (dim > 0).then_some(dim),
            ..Default::default()
        };
        *out = Box::into_raw(Box::new(FexProblem(PdeProblem::make(name, ov)?)));
        Ok(())
    })
}

/// # Safety
/// `problem` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_problem_dim(problem: *const FexProblem, out: *mut usize) -> FexStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(problem, "problem")?.0.dim;
        Ok(())
    })
}

/// Exact solution at `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `problem` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_problem_true_value(
    problem: *const FexProblem,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> FexStatus {
    guard(|| {
        let p = &ref_arg(problem, "problem")?.0;
        let x = slice_arg(x, len, "x")?;
        let out = out_arg(out, "out")?;
        check_dim(len, p.dim)?;
        *out = p.true_value(x);
        Ok(())
    })
}

/// Right-hand side `f` at `x`.
///
/// # Safety
/// `x` must hold `len` doubles; `problem` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_problem_rhs(problem: *const FexProblem, x: *const f64, len: usize, out: *mut f64) -> FexStatus {
    guard(|| {
        let p = &ref_arg(problem, "problem")?.0;
        let x = slice_arg(x, len, "x")?;
        let out = out_arg(out, "out")?;
        check_dim(len, p.dim)?;
        *out = p.rhs(x);
        Ok(())
    })
}

/// # Safety
/// `problem` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fex_problem_free(problem: *mut FexProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Monte Carlo relative L² error of `expr` against the exact solution,
/// averaged over `repeats` batches of `points` interior samples.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_relative_l2(
    problem: *const FexProblem,
    expr: *const FexExpression,
    points: usize,
    repeats: usize,
    seed: u64,
    mean: *mut f64,
    std: *mut f64,
) -> FexStatus {
    guard(|| {
        let p = &ref_arg(problem, "problem")?.0;
        let e = &ref_arg(expr, "expr")?.0;
        let mean = out_arg(mean, "mean")?;
        let std = out_arg(std, "std")?;
        check_dim(e.dim(), p.dim)?;
        let report = mc_relative_l2(p, |x: &[f64]| e.value(x).unwrap_or(f64::NAN), points, repeats, seed)?;
        *mean = report.mean;
        *std = report.std;
        Ok(())
    })
}

/// Runs a full search from a JSON run configuration and returns the best
/// fine-tuned expression and its loss. `run_dir` may be null, in which case
/// nothing is written to disk.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `run_dir` must be null or
/// NUL-terminated; `best_out` and `loss_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fex_solve(
    config_json: *const c_char,
    run_dir: *const c_char,
    best_out: *mut *mut FexExpression,
    loss_out: *mut f64,
) -> FexStatus {
    guard(|| {
        let text = str_arg(config_json, "config_json")?;
        let dir = if run_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(run_dir, "run_dir")?))
        };
        let best_out = out_arg(best_out, "best_out")?;
        let loss_out = out_arg(loss_out, "loss_out")?;
        let cfg = RunConfig::from_json_with_overrides(text, &[])?;
        let opts = RunOptions {
            run_dir: dir,
            ..Default::default()
        };
        match run_search(&cfg, &opts)? {
            SearchOutcome::Finished(res) => {
                *loss_out = res.best.loss;
                *best_out = Box::into_raw(Box::new(FexExpression(res.best.expression)));
                Ok(())
            }
            SearchOutcome::Interrupted { .. } => Err(invalid("search stopped before completion")),
        }
    })
}
