use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use meda_ffi::*;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = meda_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(name: &str) -> *mut MedaProblem {
    let path = cstr(fixtures().join(name).to_str().unwrap());
    let mut problem = ptr::null_mut();
    assert_eq!(
        unsafe { meda_problem_load(path.as_ptr(), &mut problem) },
        MedaStatus::Ok
    );
    problem
}

#[test]
fn derive_and_verify_through_handles() {
    let problem = load("boussinesq.meda");
    let mut system = ptr::null_mut();
    assert_eq!(
        unsafe { meda_derive(problem, ptr::null(), &mut system) },
        MedaStatus::Ok
    );
    let mut len = 0usize;
    assert_eq!(unsafe { meda_system_len(system, &mut len) }, MedaStatus::Ok);
    assert_eq!(len, 7);

    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { meda_system_json(system, &mut json) },
        MedaStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { meda_string_free(json) };
    assert!(text.contains("\"clearing\":3"));

    let good = cstr("arbitrary: a0\na1 = 2*i\nb1 = 0\nlambda = -a0\nb = a0^2/4\n");
    let bad = cstr("arbitrary: a0\na1 = 2*i\nb1 = 0\nlambda = -a0\nb = -a0^2/4\n");
    let mut pass = false;
    assert_eq!(
        unsafe { meda_verify(system, good.as_ptr(), &mut pass, ptr::null_mut()) },
        MedaStatus::Ok
    );
    assert!(pass);
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { meda_verify(system, bad.as_ptr(), &mut pass, &mut report) },
        MedaStatus::Ok
    );
    assert!(!pass);
    let report_text = unsafe { CStr::from_ptr(report) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { meda_string_free(report) };
    assert!(report_text.contains("-2*i*a0^2"), "{report_text}");

    unsafe {
        meda_system_free(system);
        meda_problem_free(problem);
    }
}

#[test]
fn explicit_transform_and_refusal() {
    let problem = load("rlw.meda");
    let mut system = ptr::null_mut();
    let p = cstr("-1/(n - 1)");
    assert_eq!(
        unsafe { meda_derive(problem, p.as_ptr(), &mut system) },
        MedaStatus::Ok
    );
    unsafe { meda_system_free(system) };

    let zero = cstr("0");
    let status = unsafe { meda_derive(problem, zero.as_ptr(), &mut system) };
    assert_ne!(status, MedaStatus::Ok);
    assert!(!last_error().is_empty());
    unsafe { meda_problem_free(problem) };
}

#[test]
fn error_codes() {
    let mut problem = ptr::null_mut();
    assert_eq!(
        unsafe { meda_problem_parse(ptr::null(), &mut problem) },
        MedaStatus::NullArgument
    );
    assert!(last_error().contains("null"));

    let broken = cstr(
        "problem p\nvars x t\nunknowns u\neq: D(u, t + u = 0\nwave: z = i*(x - c*t)\nparams c\n",
    );
    assert_eq!(
        unsafe { meda_problem_parse(broken.as_ptr(), &mut problem) },
        MedaStatus::Parse
    );
    assert!(last_error().contains("line 4"), "{}", last_error());

    let missing = cstr("/nonexistent/problem.meda");
    assert_eq!(
        unsafe { meda_problem_load(missing.as_ptr(), &mut problem) },
        MedaStatus::Io
    );

    let bad_utf8 = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { meda_problem_parse(bad_utf8.as_ptr().cast(), &mut problem) },
        MedaStatus::InvalidUtf8
    );

    let mut len = 0usize;
    assert_eq!(
        unsafe { meda_system_len(ptr::null(), &mut len) },
        MedaStatus::NullArgument
    );

    // a successful call clears the message
    let p = load("phi4.meda");
    assert!(meda_last_error().is_null());
    unsafe {
        meda_problem_free(p);
        meda_problem_free(ptr::null_mut());
        meda_string_free(ptr::null_mut());
    }
}

#[test]
fn compat_single_case() {
    let dir = cstr(fixtures().to_str().unwrap());
    let only = cstr("boussinesq-case-I");
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { meda_compat(dir.as_ptr(), only.as_ptr(), &mut out) },
        MedaStatus::Ok
    );
    let text = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_string();
    unsafe { meda_string_free(out) };
    let v: Vec<&str> = text.matches("\"case\":").collect();
    assert_eq!(v.len(), 1);
    assert!(text.contains("\"pass\":false"));
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(meda_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_interface_and_compiles() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/meda.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct MedaProblem MedaProblem;",
        "MEDA_STATUS_OK = 0",
        "meda_problem_load",
        "meda_derive",
        "meda_verify",
        "meda_compat",
        "meda_string_free",
        "meda_last_error",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(status.success());
}
