use std::ffi::{CStr, CString};
use std::ptr;

use fex_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fex_last_error_message()).to_string_lossy().into_owned() }
}

fn record_missing_fields() -> String {
    serde_json::json!({"skeleton": null, "e": [], "theta": [1.0]}).to_string()
}

#[test]
fn tn_build_and_derivatives() {
    let tag = CString::new("x^2").unwrap();
    let mut op = ptr::null_mut();
    let st = unsafe { fex_tn_build(tag.as_ptr(), -1.0, 1.0, 200, 0.4, 500, 7, &mut op) };
    assert_eq!(st, FexStatus::Ok, "{}", last_error());
    let mut err = 0.0;
    let mut d = [0.0; 4];
    unsafe {
        assert_eq!(fex_tn_fit_sup_error(op, &mut err), FexStatus::Ok);
        assert_eq!(fex_tn_derivs(op, 0.5, d.as_mut_ptr()), FexStatus::Ok);
        fex_tn_free(op);
    }
    assert!(err < 1e-3, "sup error {err}");
    assert!((d[0] - 0.25).abs() < 1e-3);
    assert!((d[1] - 1.0).abs() < 1e-2);
}

#[test]
fn unknown_target_sets_message() {
    let tag = CString::new("tan").unwrap();
    let mut op = ptr::null_mut();
    let st = unsafe { fex_tn_build(tag.as_ptr(), -1.0, 1.0, 10, 1.0, 20, 1, &mut op) };
    assert_eq!(st, FexStatus::InvalidArgument);
    assert!(op.is_null());
    assert!(last_error().contains("tan"));
}

#[test]
fn null_pointers_are_reported() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { fex_problem_new(ptr::null(), 0, &mut out) }, FexStatus::NullPointer);
    let name = CString::new("poisson60").unwrap();
    assert_eq!(unsafe { fex_problem_new(name.as_ptr(), 0, ptr::null_mut()) }, FexStatus::NullPointer);
    unsafe {
        fex_problem_free(ptr::null_mut());
        fex_expression_free(ptr::null_mut());
        fex_tn_free(ptr::null_mut());
        fex_string_free(ptr::null_mut());
    }
}

#[test]
fn problem_values() {
    let name = CString::new("poisson60").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { fex_problem_new(name.as_ptr(), 3, &mut p) }, FexStatus::Ok);
    let x = [0.5, -0.5, 1.0];
    let (mut dim, mut u, mut f) = (0usize, 0.0, 0.0);
    unsafe {
        assert_eq!(fex_problem_dim(p, &mut dim), FexStatus::Ok);
        assert_eq!(fex_problem_true_value(p, x.as_ptr(), 3, &mut u), FexStatus::Ok);
        assert_eq!(fex_problem_rhs(p, x.as_ptr(), 3, &mut f), FexStatus::Ok);
        assert_eq!(fex_problem_true_value(p, x.as_ptr(), 2, &mut u), FexStatus::InvalidArgument);
        fex_problem_free(p);
    }
    assert_eq!(dim, 3);
    assert_eq!(u, 0.75);
    // -Δu = -d for u = ½|x|².
    assert_eq!(f, -3.0);

    let bad = CString::new("heat1d").unwrap();
    let mut q = ptr::null_mut();
    assert_eq!(unsafe { fex_problem_new(bad.as_ptr(), 0, &mut q) }, FexStatus::Config);
    assert!(last_error().contains("heat1d"));
}

#[test]
fn malformed_expression_json() {
    let mut e = ptr::null_mut();
    let text = CString::new(record_missing_fields()).unwrap();
    assert_eq!(unsafe { fex_expression_from_json(text.as_ptr(), &mut e) }, FexStatus::Config);
    let junk = CString::new("{not json").unwrap();
    assert_eq!(unsafe { fex_expression_from_json(junk.as_ptr(), &mut e) }, FexStatus::Config);
    assert!(e.is_null());
}

fn desk_config() -> String {
    serde_json::json!({
        "problem": {"name": "poisson60", "d": 3, "n_interior": 100, "n_boundary": 100, "seed": 5},
        "pool": {"unary": ["0", "1", "id", "TN[x^2]"], "tn": {"neurons": 100, "samples": 300, "gamma": 0.4}},
        "depth": 2,
        "search": {"iterations": 6, "batch": 4, "pool_size": 2, "checkpoint_every": 3},
        "fine_tune": {"steps": 300},
        "seed": 11
    })
    .to_string()
}

#[test]
fn solve_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CString::new(desk_config()).unwrap();
    let run = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut best = ptr::null_mut();
    let mut loss = f64::NAN;
    let st = unsafe { fex_solve(cfg.as_ptr(), run.as_ptr(), &mut best, &mut loss) };
    assert_eq!(st, FexStatus::Ok, "{}", last_error());
    assert!(loss.is_finite());

    let mut dim = 0usize;
    let mut rendered = ptr::null_mut();
    unsafe {
        assert_eq!(fex_expression_dim(best, &mut dim), FexStatus::Ok);
        assert_eq!(fex_expression_render(best, 3, &mut rendered), FexStatus::Ok);
        assert!(!CStr::from_ptr(rendered).to_bytes().is_empty());
        fex_string_free(rendered);
    }
    assert_eq!(dim, 3);

    // The exported file reloads to the same function.
    let text = std::fs::read_to_string(dir.path().join("best_expression.json")).unwrap();
    let text = CString::new(text).unwrap();
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { fex_expression_from_json(text.as_ptr(), &mut again) }, FexStatus::Ok, "{}", last_error());
    let x = [0.1, -0.2, 0.3];
    let (mut v1, mut v2, mut lap) = (0.0, 0.0, 0.0);
    let mut grad = [0.0; 3];
    unsafe {
        assert_eq!(fex_expression_eval(best, x.as_ptr(), 3, &mut v1), FexStatus::Ok);
        assert_eq!(
            fex_expression_jet(again, x.as_ptr(), 3, &mut v2, grad.as_mut_ptr(), &mut lap),
            FexStatus::Ok
        );
        assert_eq!(fex_expression_eval(best, x.as_ptr(), 2, &mut v1), FexStatus::InvalidArgument);
    }
    assert_eq!(v1, v2);

    let name = CString::new("poisson60").unwrap();
    let mut p = ptr::null_mut();
    let (mut mean, mut std) = (0.0, 0.0);
    unsafe {
        assert_eq!(fex_problem_new(name.as_ptr(), 3, &mut p), FexStatus::Ok);
        assert_eq!(fex_relative_l2(p, again, 500, 4, 1, &mut mean, &mut std), FexStatus::Ok);
        fex_problem_free(p);
        fex_expression_free(again);
        fex_expression_free(best);
    }
    assert!(mean.is_finite() && std >= 0.0);
}

#[test]
fn header_is_generated_and_parses_as_c() {
    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fex.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in ["fex_last_error_message", "fex_tn_build", "fex_expression_jet", "fex_solve", "FEX_STATUS_PANIC"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).output() else {
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
