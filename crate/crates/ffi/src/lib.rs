//! C bindings for the whittle library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every fallible call returns a
//! [`WhittleStatus`]; the message of the most recent failure on the calling
//! thread is available from [`whittle_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use whittle::cli::{parse_model_spec, parse_template};
use whittle::inference::{fit_with, FitOptions, FitResult};
use whittle::likelihood::{Domain, LikelihoodObjective, ObjectiveConfig, Variant};
use whittle::models::ModelSpec;
use whittle::series::{MaskSpec, SampledSeries, SeriesKind};
use whittle::simulate::{Embedding, Simulator};
use whittle::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhittleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Numerical = 4,
    NotConverged = 5,
    Panic = 6,
}

pub struct WhittleSeries(SampledSeries);
pub struct WhittleModel(ModelSpec);
pub struct WhittleObjective(LikelihoodObjective);
pub struct WhittleFit(FitResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> WhittleStatus {
    match err {
        Error::Validity(_) | Error::Nonstationary(_) => WhittleStatus::InvalidModel,
        Error::Conditioning { .. } | Error::NonpositiveSpectrum { .. } | Error::Nesting(_) => WhittleStatus::Numerical,
        _ => WhittleStatus::InvalidArgument,
    }
}

struct Failure(WhittleStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(WhittleStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, recording any error or panic for [`whittle_last_error`].
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WhittleStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WhittleStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            WhittleStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(WhittleStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn whittle_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn whittle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from a whittle call returning an owned string.
#[no_mangle]
pub unsafe extern "C" fn whittle_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `values` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_series_new_real(
    values: *const f64,
    n: usize,
    delta: f64,
    out: *mut *mut WhittleSeries,
) -> WhittleStatus {
    guard(|| {
        let v = slice(values, n, "values")?.to_vec();
        put(out, WhittleSeries(SampledSeries::real(v, delta)?))
    })
}

/// Complex series from separate real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_series_new_complex(
    re: *const f64,
    im: *const f64,
    n: usize,
    delta: f64,
    out: *mut *mut WhittleSeries,
) -> WhittleStatus {
    guard(|| {
        let (re, im) = (slice(re, n, "re")?, slice(im, n, "im")?);
        let z = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        put(out, WhittleSeries(SampledSeries::complex(z, delta)?))
    })
}

/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_series_len(series: *const WhittleSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the samples into `re` and, for complex series, `im` (which may be
/// null for real series). Both buffers need room for the series length.
///
/// # Safety
/// `series` must be a live handle and the buffers writable for its length.
#[no_mangle]
pub unsafe extern "C" fn whittle_series_values(
    series: *const WhittleSeries,
    re: *mut f64,
    im: *mut f64,
) -> WhittleStatus {
    guard(|| {
        let s = &handle(series, "series")?.0;
        if re.is_null() {
            return Err(null("re"));
        }
        if im.is_null() && s.kind() == SeriesKind::Complex {
            return Err(null("im"));
        }
        for (k, z) in s.values().iter().enumerate() {
            *re.add(k) = z.re;
            if !im.is_null() {
                *im.add(k) = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `series` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn whittle_series_free(series: *mut WhittleSeries) {
    release(series);
}

/// Parses a model from `{"model": ..., "params": {...}}` JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_model_from_json(json: *const c_char, out: *mut *mut WhittleModel) -> WhittleStatus {
    guard(|| {
        let spec = parse_model_spec(text(json, "json")?)?;
        put(out, WhittleModel(spec))
    })
}

/// Model as JSON; release with [`whittle_string_free`].
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_model_to_json(model: *const WhittleModel) -> *mut c_char {
    model
        .as_ref()
        .and_then(|m| serde_json::to_string(&m.0).ok())
        .map_or(ptr::null_mut(), to_c_string)
}

/// Autocovariance of a real-valued model at lags `0..n_lags`.
///
/// # Safety
/// `model` must be a live handle and `out` writable for `n_lags` doubles.
#[no_mangle]
pub unsafe extern "C" fn whittle_model_acvs(
    model: *const WhittleModel,
    n_lags: usize,
    delta: f64,
    out: *mut f64,
) -> WhittleStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let lags = m.real_lags(n_lags, delta)?;
        ptr::copy_nonoverlapping(lags.as_ptr(), out, n_lags);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn whittle_model_free(model: *mut WhittleModel) {
    release(model);
}

/// Draws replicate `replicate` of length `n` under the seeding contract of
/// the simulator.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_simulate(
    model: *const WhittleModel,
    n: usize,
    delta: f64,
    seed: u64,
    replicate: u64,
    out: *mut *mut WhittleSeries,
) -> WhittleStatus {
    guard(|| {
        let m = &handle(model, "model")?.0;
        let sim = Simulator::new(m, n, delta, seed, Embedding::Circulant)?;
        put(out, WhittleSeries(sim.draw(replicate)))
    })
}

/// Binds a likelihood to a series.
///
/// `template` takes the CLI model shorthand or template JSON, `variant` one
/// of `time_exact`, `standard`, `blurred`, `tapered`, `tapered_blurred`.
/// `domain` may be null for the default of the series kind. `mask_max` is the
/// upper frequency fraction in `(0, 1]`.
///
/// # Safety
/// Strings must be NUL-terminated; `series` a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_objective_new(
    series: *const WhittleSeries,
    template: *const c_char,
    variant: *const c_char,
    domain: *const c_char,
    mask_max: f64,
    exclude_zero: bool,
    out: *mut *mut WhittleObjective,
) -> WhittleStatus {
    guard(|| {
        let s = &handle(series, "series")?.0;
        let template = parse_template("template", text(template, "template")?)?;
        let variant = Variant::parse(text(variant, "variant")?)?;
        let domain = if domain.is_null() {
            match s.kind() {
                SeriesKind::Real => Domain::Real,
                SeriesKind::Complex => Domain::Rotary,
            }
        } else {
            Domain::parse(text(domain, "domain")?)?
        };
        let mut cfg = ObjectiveConfig::new(variant, domain);
        cfg.mask = MaskSpec {
            min_fraction: 0.0,
            max_fraction: mask_max,
            exclude_zero: cfg.mask.exclude_zero || exclude_zero,
        };
        put(out, WhittleObjective(LikelihoodObjective::new(s, template, cfg)?))
    })
}

/// Number of free parameters of the bound template.
///
/// # Safety
/// `objective` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_objective_n_params(objective: *const WhittleObjective) -> usize {
    objective.as_ref().map_or(0, |o| o.0.template().n_free())
}

/// Log-likelihood at the free parameter values `theta`.
///
/// # Safety
/// `objective` must be a live handle, `theta` readable for `len` doubles and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_objective_loglik(
    objective: *const WhittleObjective,
    theta: *const f64,
    len: usize,
    out: *mut f64,
) -> WhittleStatus {
    guard(|| {
        let o = &handle(objective, "objective")?.0;
        let theta = slice(theta, len, "theta")?;
        if len != o.template().n_free() {
            return Err(Failure(
                WhittleStatus::InvalidArgument,
                format!("expected {} parameters, got {len}", o.template().n_free()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        *out = o.loglik_free(theta)?;
        Ok(())
    })
}

/// # Safety
/// `objective` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn whittle_objective_free(objective: *mut WhittleObjective) {
    release(objective);
}

/// Maximizes the objective from its default starting point, with
/// standard errors. A fit that stops without converging is still returned
/// through `out`, with status `NotConverged`.
///
/// # Safety
/// `objective` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit(objective: *const WhittleObjective, out: *mut *mut WhittleFit) -> WhittleStatus {
    let mut converged = true;
    let status = guard(|| {
        let o = &handle(objective, "objective")?.0;
        let fit = fit_with(o, None, &FitOptions::default())?;
        converged = fit.converged;
        put(out, WhittleFit(fit))
    });
    if status == WhittleStatus::Ok && !converged {
        set_error("optimizer did not converge");
        return WhittleStatus::NotConverged;
    }
    status
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_n_params(fit: *const WhittleFit) -> usize {
    fit.as_ref().map_or(0, |f| f.0.theta_hat.len())
}

/// Copies the estimates into `theta` and, when non-null, the standard
/// errors into `std_errors` (NaN where unavailable).
///
/// # Safety
/// `fit` must be a live handle and the buffers writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_theta(
    fit: *const WhittleFit,
    theta: *mut f64,
    std_errors: *mut f64,
    len: usize,
) -> WhittleStatus {
    guard(|| {
        let f = &handle(fit, "fit")?.0;
        let values = f.theta_hat.values();
        if len != values.len() {
            return Err(Failure(
                WhittleStatus::InvalidArgument,
                format!("fit has {} parameters, buffer holds {len}", values.len()),
            ));
        }
        if theta.is_null() {
            return Err(null("theta"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), theta, len);
        if !std_errors.is_null() {
            for k in 0..len {
                *std_errors.add(k) = f.std_errors.as_ref().map_or(f64::NAN, |s| s[k]);
            }
        }
        Ok(())
    })
}

/// Maximized log-likelihood, or NaN for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_loglik(fit: *const WhittleFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.loglik)
}

/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_aicc(fit: *const WhittleFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.0.aicc)
}

/// Full fit report as JSON; release with [`whittle_string_free`].
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_to_json(fit: *const WhittleFit) -> *mut c_char {
    fit.as_ref()
        .and_then(|f| serde_json::to_string(&f.0).ok())
        .map_or(ptr::null_mut(), to_c_string)
}

/// # Safety
/// `fit` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn whittle_fit_free(fit: *mut WhittleFit) {
    release(fit);
}
