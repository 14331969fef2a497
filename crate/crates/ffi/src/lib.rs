//! C interface. Objects cross the boundary as opaque handles; every fallible
//! call returns a [`MedaStatus`] and leaves a message for [`meda_last_error`].
//! Strings returned through out-parameters are owned by the caller and must
//! be released with [`meda_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use meda::algsolve::{verify_candidate, Candidate};
use meda::compat::run_all;
use meda::expr::{parse_expr, Scope};
use meda::pde::PdeProblem;
use meda::pipeline::{derive, Derivation, DeriveOptions, TransformChoice};
use meda::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MedaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Io = 4,
    Derivation = 5,
    Numeric = 6,
    Unverified = 7,
    Panic = 8,
}

impl From<&Error> for MedaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Syntax { .. }
            | Error::Undeclared { .. }
            | Error::Dsl { .. }
            | Error::Candidate(_)
            | Error::Fixture(_) => MedaStatus::Parse,
            Error::Io { .. } => MedaStatus::Io,
            Error::Unsupported(_)
            | Error::NonPolynomial(_)
            | Error::DivisionByZero(_)
            | Error::NotReducible(_)
            | Error::Integration { .. }
            | Error::Elimination(_)
            | Error::Balance(_)
            | Error::Transform(_)
            | Error::Ansatz(_) => MedaStatus::Derivation,
            Error::Pole
            | Error::Unbound(_)
            | Error::UnexpandedDerivative(_)
            | Error::Solve(_)
            | Error::Residual(_)
            | Error::CrossCheck(_) => MedaStatus::Numeric,
            Error::Branch(_) | Error::Unverified(_) => MedaStatus::Unverified,
        }
    }
}

/// A parsed problem file.
pub struct MedaProblem(PdeProblem);

/// A derived algebraic system together with the equations it came from.
pub struct MedaSystem(Derivation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MedaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MedaStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MedaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MedaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MedaStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MedaStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MedaStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(MedaStatus::NullArgument, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

/// The message of the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn meda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn meda_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn meda_problem_parse(
    source: *const c_char,
    out: *mut *mut MedaProblem,
) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let p = PdeProblem::parse(c_str(source, "source")?)?;
        *out = Box::into_raw(Box::new(MedaProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn meda_problem_load(
    path: *const c_char,
    out: *mut *mut MedaProblem,
) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let p = PdeProblem::from_file(c_str(path, "path")?)?;
        *out = Box::into_raw(Box::new(MedaProblem(p)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn meda_problem_free(problem: *mut MedaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Derives the algebraic system. `transform` may be NULL (use the balance's
/// suggestion when needed) or an exponent such as `"-1/(n - 1)"`.
///
/// # Safety
/// Pointers must be valid; `transform` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn meda_derive(
    problem: *const MedaProblem,
    transform: *const c_char,
    out: *mut *mut MedaSystem,
) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let problem = problem
            .as_ref()
            .ok_or_else(|| Failure(MedaStatus::NullArgument, "problem is null".into()))?;
        let transform = if transform.is_null() {
            TransformChoice::Auto
        } else {
            TransformChoice::Explicit(parse_expr(c_str(transform, "transform")?, &Scope::open())?)
        };
        let d = derive(
            &problem.0,
            &DeriveOptions {
                transform,
                ..DeriveOptions::default()
            },
        )?;
        *out = Box::into_raw(Box::new(MedaSystem(d)));
        Ok(())
    })
}

/// # Safety
/// `system` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn meda_system_free(system: *mut MedaSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn meda_system_len(system: *const MedaSystem, out: *mut usize) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let s = system
            .as_ref()
            .ok_or_else(|| Failure(MedaStatus::NullArgument, "system is null".into()))?;
        *out = s.0.system.len();
        Ok(())
    })
}

/// The system as JSON.
///
/// # Safety
/// Pointers must be valid; free the result with `meda_string_free`.
#[no_mangle]
pub unsafe extern "C" fn meda_system_json(
    system: *const MedaSystem,
    out: *mut *mut c_char,
) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let s = system
            .as_ref()
            .ok_or_else(|| Failure(MedaStatus::NullArgument, "system is null".into()))?;
        *out = owned_string(s.0.system.to_json().to_string());
        Ok(())
    })
}

/// Exact check of a candidate (same text format as candidate files).
/// `report_json` may be NULL.
///
/// # Safety
/// Pointers must be valid; free `*report_json` with `meda_string_free`.
#[no_mangle]
pub unsafe extern "C" fn meda_verify(
    system: *const MedaSystem,
    candidate: *const c_char,
    pass: *mut bool,
    report_json: *mut *mut c_char,
) -> MedaStatus {
    guard(|| {
        out_ptr(pass, "pass")?;
        let s = system
            .as_ref()
            .ok_or_else(|| Failure(MedaStatus::NullArgument, "system is null".into()))?;
        let (cand, _) = Candidate::parse(c_str(candidate, "candidate")?)?;
        let report = verify_candidate(&s.0.system, &cand)?;
        *pass = report.pass;
        if !report_json.is_null() {
            *report_json = owned_string(report.to_json().to_string());
        }
        Ok(())
    })
}

/// Runs the case files under `fixtures_dir/cases`. `only` may be NULL.
///
/// # Safety
/// Pointers must be valid; free the result with `meda_string_free`.
#[no_mangle]
pub unsafe extern "C" fn meda_compat(
    fixtures_dir: *const c_char,
    only: *const c_char,
    out: *mut *mut c_char,
) -> MedaStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let dir = c_str(fixtures_dir, "fixtures_dir")?;
        let only = if only.is_null() {
            None
        } else {
            Some(c_str(only, "only")?)
        };
        let report = run_all(Path::new(dir), only)?;
        *out = owned_string(report.to_json().to_string());
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library (or be NULL) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn meda_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
