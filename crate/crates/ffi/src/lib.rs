//! C ABI over `postlasso`.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns a [`PlStatus`]; on failure the
//! message is available from [`pl_last_error_message`] on the same thread.
//! Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use postlasso::lasso::{fit_lasso, LassoFit, LassoOptions};
use postlasso::penalty::{estimate_sigma_with_fit, simulate_lambda_quantile, PenaltyParams};
use postlasso::postselect::{
    post_fitness, post_lasso, post_traditional, FitnessSearch, GammaChoice, PostSelectionFit,
};
use postlasso::{Error, ErrorKind, RegressionProblem};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    Usage = 2,
    Data = 3,
    Numerical = 4,
    Budget = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlScheme {
    Plain = 0,
    Traditional = 1,
    Fitness = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlPenaltyParams {
    pub alpha: f64,
    pub c: f64,
    pub c_prime: f64,
    pub mc_draws: usize,
    pub seed: u64,
    pub max_refits: usize,
}

impl From<PlPenaltyParams> for PenaltyParams {
    fn from(p: PlPenaltyParams) -> Self {
        PenaltyParams {
            alpha: p.alpha,
            c: p.c,
            c_prime: p.c_prime,
            mc_draws: p.mc_draws,
            seed: p.seed,
            max_refits: p.max_refits,
        }
    }
}

pub struct PlProblem {
    inner: RegressionProblem,
}

pub struct PlLassoFit {
    inner: LassoFit,
    original: DVector<f64>,
}

pub struct PlPostFit {
    inner: PostSelectionFit,
    original: DVector<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PlStatus {
    match e.kind() {
        ErrorKind::Usage => PlStatus::Usage,
        ErrorKind::Data => PlStatus::Data,
        ErrorKind::Numerical => PlStatus::Numerical,
        ErrorKind::Budget => PlStatus::Budget,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), PlStatus>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            PlStatus::Panic
        }
    }
}

fn fail(e: Error) -> PlStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null(what: &str) -> PlStatus {
    set_error(&format!("null pointer: {what}"));
    PlStatus::NullPointer
}

fn copy_out(src: &DVector<f64>, out: *mut f64, len: usize) -> Result<(), PlStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len != src.len() {
        set_error(&format!("output buffer has length {len}, need {}", src.len()));
        return Err(PlStatus::Usage);
    }
    // SAFETY: caller guarantees `out` points to `len` writable doubles.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, len) };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map(|c| c.as_bytes()).unwrap_or(b"");
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

#[no_mangle]
pub extern "C" fn pl_penalty_params_default() -> PlPenaltyParams {
    let d = PenaltyParams::default();
    PlPenaltyParams {
        alpha: d.alpha,
        c: d.c,
        c_prime: d.c_prime,
        mc_draws: d.mc_draws,
        seed: d.seed,
        max_refits: d.max_refits,
    }
}

/// Builds a problem from a row-major `n x p` design and a length-`n` response.
/// Columns are normalized internally.
///
/// # Safety
/// `x` must point to `n * p` doubles, `y` to `n` doubles, `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pl_problem_new(
    x: *const f64,
    n: usize,
    p: usize,
    y: *const f64,
    out: *mut *mut PlProblem,
) -> PlStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("pl_problem_new argument"));
        }
        let cells = n.checked_mul(p).ok_or_else(|| fail(Error::invalid("n * p overflows")))?;
        let xs = std::slice::from_raw_parts(x, cells);
        let ys = std::slice::from_raw_parts(y, n);
        let inner = RegressionProblem::new(DMatrix::from_row_slice(n, p, xs), DVector::from_column_slice(ys))
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(PlProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`pl_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pl_problem_free(problem: *mut PlProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// # Safety
/// `problem` must be a live handle; `n` and `p` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_problem_dims(problem: *const PlProblem, n: *mut usize, p: *mut usize) -> PlStatus {
    guard(|| {
        let pr = problem.as_ref().ok_or_else(|| null("problem"))?;
        if n.is_null() || p.is_null() {
            return Err(null("dims output"));
        }
        *n = pr.inner.n();
        *p = pr.inner.p();
        Ok(())
    })
}

/// Monte Carlo estimate of the penalty quantile for the problem's design.
///
/// # Safety
/// `problem` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_lambda_quantile(
    problem: *const PlProblem,
    alpha: f64,
    mc_draws: usize,
    seed: u64,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let pr = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = simulate_lambda_quantile(pr.inner.x(), alpha, mc_draws, seed).map_err(fail)?;
        Ok(())
    })
}

/// Data-driven penalty with the iterated noise-level estimate.
///
/// # Safety
/// `problem` and `params` must be valid; `lambda_out` and `sigma_out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_penalty_calibrate(
    problem: *const PlProblem,
    params: *const PlPenaltyParams,
    lambda_out: *mut f64,
    sigma_out: *mut f64,
) -> PlStatus {
    guard(|| {
        let pr = problem.as_ref().ok_or_else(|| null("problem"))?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if lambda_out.is_null() || sigma_out.is_null() {
            return Err(null("calibration output"));
        }
        let (cal, _) = estimate_sigma_with_fit(&pr.inner, &(*params).into(), &LassoOptions::default())
            .map_err(fail)?;
        *lambda_out = cal.lambda_final;
        *sigma_out = cal.sigma_hat();
        Ok(())
    })
}

/// # Safety
/// `problem` must be a live handle; `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pl_lasso_fit(problem: *const PlProblem, lambda: f64, out: *mut *mut PlLassoFit) -> PlStatus {
    guard(|| {
        let pr = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = fit_lasso(&pr.inner, lambda, &LassoOptions::default()).map_err(fail)?;
        let original = pr.inner.to_original_scale(&inner.beta_hat);
        *out = Box::into_raw(Box::new(PlLassoFit { inner, original }));
        Ok(())
    })
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_lasso_fit_free(fit: *mut PlLassoFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Coefficients on the scale of the raw design.
///
/// # Safety
/// `fit` must be a live handle; `out` must hold `len == p` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_lasso_fit_coefficients(fit: *const PlLassoFit, out: *mut f64, len: usize) -> PlStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        copy_out(&f.original, out, len)
    })
}

/// `Q(β̂)`, the unpenalized in-sample objective. NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_lasso_fit_objective(fit: *const PlLassoFit) -> f64 {
    fit.as_ref().map(|f| f.inner.objective).unwrap_or(f64::NAN)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_lasso_fit_n_selected(fit: *const PlLassoFit) -> usize {
    fit.as_ref().map(|f| f.inner.support.len()).unwrap_or(0)
}

/// OLS refit after LASSO selection. `param` is `c_tilde` for the traditional
/// scheme and `gamma` for the fitness scheme; NaN selects the default
/// (`c_tilde = 1`, automatic `gamma`). Ignored for the plain scheme.
///
/// # Safety
/// `problem` and `fit` must be live handles with `fit` computed on `problem`;
/// `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn pl_post_select(
    problem: *const PlProblem,
    fit: *const PlLassoFit,
    scheme: PlScheme,
    param: f64,
    out: *mut *mut PlPostFit,
) -> PlStatus {
    guard(|| {
        let pr = problem.as_ref().ok_or_else(|| null("problem"))?;
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if f.inner.beta_hat.len() != pr.inner.p() {
            return Err(fail(Error::invalid("fit does not belong to this problem")));
        }
        let inner = match scheme {
            PlScheme::Plain => post_lasso(&pr.inner, &f.inner),
            PlScheme::Traditional => {
                post_traditional(&pr.inner, &f.inner, if param.is_nan() { 1.0 } else { param })
            }
            PlScheme::Fitness => {
                let g = if param.is_nan() { GammaChoice::Auto } else { GammaChoice::Value(param) };
                post_fitness(&pr.inner, &f.inner, g, FitnessSearch::Binary)
            }
        }
        .map_err(fail)?;
        let original = pr.inner.to_original_scale(&inner.beta_tilde);
        *out = Box::into_raw(Box::new(PlPostFit { inner, original }));
        Ok(())
    })
}

/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_free(post: *mut PlPostFit) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

/// # Safety
/// `post` must be a live handle; `out` must hold `len == p` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_coefficients(post: *const PlPostFit, out: *mut f64, len: usize) -> PlStatus {
    guard(|| {
        let f = post.as_ref().ok_or_else(|| null("post"))?;
        copy_out(&f.original, out, len)
    })
}

/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_objective(post: *const PlPostFit) -> f64 {
    post.as_ref().map(|f| f.inner.objective).unwrap_or(f64::NAN)
}

/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_n_selected(post: *const PlPostFit) -> usize {
    post.as_ref().map(|f| f.inner.selected.len()).unwrap_or(0)
}

/// Number of least-squares solves the scheme performed.
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_ols_solves(post: *const PlPostFit) -> usize {
    post.as_ref().map(|f| f.inner.ols_solves).unwrap_or(0)
}

/// Selection threshold `t` used by the scheme.
///
/// # Safety
/// `post` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pl_post_fit_threshold(post: *const PlPostFit) -> f64 {
    post.as_ref().map(|f| f.inner.threshold_t).unwrap_or(f64::NAN)
}
