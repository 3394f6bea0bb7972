//! C interface to the solver, the certificate engine and the verification
//! harness.
//!
//! Problems cross the boundary as opaque handles; results come back as JSON
//! strings owned by the caller and released with [`hsdm_string_free`]. Every
//! call returns an [`HsdmStatus`]; the message of the last failure on the
//! calling thread is available from [`hsdm_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hsdm::cli::{self, CertMode, CliError, Suite, VerifyOptions};
use hsdm::gfun::GFunction;
use hsdm::spec::Problem;

/// Status codes; the nonzero values match the CLI exit codes where both exist.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsdmStatus {
    Ok = 0,
    Runtime = 1,
    InvalidInput = 2,
    Divergence = 3,
    NoModulus = 4,
    CheckFailed = 5,
    NullArgument = 6,
    InvalidUtf8 = 7,
    Panic = 8,
}

/// Options for [`hsdm_verify`]. `budget == 0` keeps the problem's budget and
/// `has_seed == false` keeps its seed.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct HsdmVerifyOptions {
    pub epsilon: f64,
    pub cases: usize,
    pub steps: usize,
    pub budget: u64,
    pub seed: u64,
    pub has_seed: bool,
}

/// A validated problem.
pub struct HsdmProblem {
    inner: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HsdmStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match e.exit_code() {
            2 => HsdmStatus::InvalidInput,
            3 => HsdmStatus::Divergence,
            4 => HsdmStatus::NoModulus,
            5 => HsdmStatus::CheckFailed,
            _ => HsdmStatus::Runtime,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HsdmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HsdmStatus::Ok,
        Ok(Err(Failure(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            HsdmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HsdmStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(HsdmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn problem<'a>(p: *const HsdmProblem) -> Result<&'a Problem, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| Failure(HsdmStatus::NullArgument, "problem is null".into()))
}

unsafe fn emit(out: *mut *mut c_char, json: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(HsdmStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(json).map_err(|e| Failure(HsdmStatus::Runtime, e.to_string()))?;
    *out = c.into_raw();
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map_err(|e| Failure(HsdmStatus::Runtime, e.to_string()))
}

unsafe fn store(out: *mut *mut HsdmProblem, p: Problem) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(HsdmStatus::NullArgument, "output pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(HsdmProblem { inner: p }));
    Ok(())
}

/// Parses and validates a problem from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hsdm_problem_from_json(json: *const c_char, out: *mut *mut HsdmProblem) -> HsdmStatus {
    guard(|| {
        let src = text(json, "json")?;
        let p = Problem::from_json(src).map_err(|e| Failure::from(CliError::from(e)))?;
        store(out, p)
    })
}

/// Loads and validates a problem file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn hsdm_problem_load(path: *const c_char, out: *mut *mut HsdmProblem) -> HsdmStatus {
    guard(|| {
        let path = text(path, "path")?;
        let p = Problem::load(path).map_err(|e| Failure::from(CliError::from(e)))?;
        store(out, p)
    })
}

/// Releases a problem handle. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hsdm_problem_free(p: *mut HsdmProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Dimension of the problem's space, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hsdm_problem_dimension(p: *const HsdmProblem) -> usize {
    p.as_ref().map_or(0, |h| h.inner.spec.dimension)
}

/// Runs `steps` iterations. `scheme` may be null for the problem's default.
/// Writes `{"summary": ..., "points": [[...], ...]}`.
///
/// # Safety
/// Pointers must be valid as documented; `out_json` receives a string to be
/// released with `hsdm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hsdm_solve(
    p: *const HsdmProblem,
    scheme: *const c_char,
    steps: usize,
    out_json: *mut *mut c_char,
) -> HsdmStatus {
    guard(|| {
        let p = problem(p)?;
        let scheme = opt_text(scheme, "scheme")?;
        let (traj, summary) = cli::solve(p, scheme, steps)?;
        let points: Vec<&[f64]> = traj.points.iter().map(|u| u.coords()).collect();
        emit(out_json, to_json(&serde_json::json!({ "summary": summary, "points": points }))?)
    })
}

/// Evaluates a rate certificate. `g` may be null for `n+1`; `mode` is one of
/// `single`, `full`, `quant`, `family`, `asy`.
///
/// The certificate is written even when its empirical witness exceeds the
/// bound; the status is then `CHECK_FAILED`.
///
/// # Safety
/// Pointers must be valid as documented.
#[no_mangle]
pub unsafe extern "C" fn hsdm_certify(
    p: *const HsdmProblem,
    epsilon: f64,
    g: *const c_char,
    mode: *const c_char,
    out_json: *mut *mut c_char,
) -> HsdmStatus {
    guard(|| {
        let p = problem(p)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Failure(HsdmStatus::InvalidInput, format!("epsilon = {epsilon} must be positive")));
        }
        let g: GFunction = opt_text(g, "g")?
            .unwrap_or("n+1")
            .parse()
            .map_err(|e| Failure(HsdmStatus::InvalidInput, format!("g: {e}")))?;
        let mode: CertMode = text(mode, "mode")?.parse()?;
        let cert = cli::certify(p, epsilon, &g, mode)?;
        emit(out_json, cert.to_json())?;
        if !cert.consistent() {
            return Err(Failure(HsdmStatus::CheckFailed, "empirical witness exceeds the bound".into()));
        }
        Ok(())
    })
}

/// Runs verification suites (`lemmas`, `adversary`, `confinement`, `all`).
/// `opts` may be null for the defaults. The report is written even when a
/// check fails; the status is then `CHECK_FAILED`.
///
/// # Safety
/// Pointers must be valid as documented.
#[no_mangle]
pub unsafe extern "C" fn hsdm_verify(
    p: *const HsdmProblem,
    suite: *const c_char,
    opts: *const HsdmVerifyOptions,
    out_json: *mut *mut c_char,
) -> HsdmStatus {
    guard(|| {
        let p = problem(p)?;
        let suite: Suite = text(suite, "suite")?.parse()?;
        let o = match opts.as_ref() {
            None => VerifyOptions::default(),
            Some(o) => VerifyOptions {
                epsilon: o.epsilon,
                budget: (o.budget > 0).then_some(o.budget),
                seed: o.has_seed.then_some(o.seed),
                cases: o.cases,
                steps: o.steps,
            },
        };
        let report = cli::verify(p, suite, &o)?;
        emit(out_json, to_json(&report)?)?;
        if !report.passed {
            return Err(Failure(HsdmStatus::CheckFailed, "verification failed".into()));
        }
        Ok(())
    })
}

/// Default verification options.
#[no_mangle]
pub extern "C" fn hsdm_verify_options_default() -> HsdmVerifyOptions {
    let d = VerifyOptions::default();
    HsdmVerifyOptions { epsilon: d.epsilon, cases: d.cases, steps: d.steps, budget: 0, seed: 0, has_seed: false }
}

/// Message of the last failure on this thread, or null. Valid until the next
/// call into the library on the same thread.
#[no_mangle]
pub extern "C" fn hsdm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn hsdm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn hsdm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
