use std::ffi::{CStr, CString};
use std::ptr;

use whittle_ffi::*;

fn last_error() -> String {
    let p = whittle_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn matern_model() -> *mut WhittleModel {
    let json = CString::new(r#"{"model":"matern","params":{"phi":10.0,"nu":0.4,"alpha":0.05}}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { whittle_model_from_json(json.as_ptr(), &mut m) }, WhittleStatus::Ok);
    m
}

#[test]
fn simulate_fit_round_trip() {
    let model = matern_model();
    let mut series = ptr::null_mut();
    unsafe {
        assert_eq!(whittle_simulate(model, 1000, 1.0, 7, 0, &mut series), WhittleStatus::Ok);
        assert_eq!(whittle_series_len(series), 1000);

        let (tpl, var) = (CString::new("matern").unwrap(), CString::new("blurred").unwrap());
        let mut obj = ptr::null_mut();
        let st = whittle_objective_new(series, tpl.as_ptr(), var.as_ptr(), ptr::null(), 1.0, false, &mut obj);
        assert_eq!(st, WhittleStatus::Ok);
        assert_eq!(whittle_objective_n_params(obj), 3);

        let mut at_truth = 0.0;
        let theta = [10.0, 0.4, 0.05];
        assert_eq!(whittle_objective_loglik(obj, theta.as_ptr(), 3, &mut at_truth), WhittleStatus::Ok);

        let mut fit = ptr::null_mut();
        assert_eq!(whittle_fit(obj, &mut fit), WhittleStatus::Ok);
        assert_eq!(whittle_fit_n_params(fit), 3);
        let (mut est, mut se) = ([0.0; 3], [0.0; 3]);
        assert_eq!(whittle_fit_theta(fit, est.as_mut_ptr(), se.as_mut_ptr(), 3), WhittleStatus::Ok);
        assert!((est[0] - 10.0).abs() < 2.0, "{est:?}");
        assert!(se.iter().all(|s| s.is_finite() && *s > 0.0), "{se:?}");
        assert!(whittle_fit_loglik(fit) >= at_truth);
        assert!(whittle_fit_aicc(fit).is_finite());

        let json = whittle_fit_to_json(fit);
        assert!(!json.is_null());
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        whittle_string_free(json);
        assert!(text.contains("\"theta_hat\""));

        whittle_fit_free(fit);
        whittle_objective_free(obj);
        whittle_series_free(series);
        whittle_model_free(model);
    }
}

#[test]
fn simulation_is_seeded() {
    let model = matern_model();
    let draw = |rep| unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(whittle_simulate(model, 64, 1.0, 3, rep, &mut s), WhittleStatus::Ok);
        let mut v = vec![0.0; 64];
        assert_eq!(whittle_series_values(s, v.as_mut_ptr(), ptr::null_mut()), WhittleStatus::Ok);
        whittle_series_free(s);
        v
    };
    assert_eq!(draw(5), draw(5));
    assert_ne!(draw(5), draw(6));
    unsafe { whittle_model_free(model) };
}

#[test]
fn acvs_matches_variance() {
    let model = matern_model();
    let mut lags = [0.0; 4];
    unsafe {
        assert_eq!(whittle_model_acvs(model, 4, 1.0, lags.as_mut_ptr()), WhittleStatus::Ok);
        whittle_model_free(model);
    }
    assert!(lags[0] > lags[1] && lags[1] > lags[3] && lags[3] > 0.0);
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(whittle_series_new_real(ptr::null(), 4, 1.0, &mut s), WhittleStatus::NullPointer);
        assert!(last_error().contains("values"));
        assert!(s.is_null());

        let bad = CString::new(r#"{"model":"matern","params":{"phi":1.0,"nu":-1.0,"alpha":1.0}}"#).unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(whittle_model_from_json(bad.as_ptr(), &mut m), WhittleStatus::InvalidArgument);
        assert!(m.is_null());

        let x = [1.0, -0.5, 0.25, 0.1, -0.3, 0.7];
        assert_eq!(whittle_series_new_real(x.as_ptr(), 6, 1.0, &mut s), WhittleStatus::Ok);
        let (tpl, var) = (CString::new("matern").unwrap(), CString::new("sideways").unwrap());
        let mut obj = ptr::null_mut();
        let st = whittle_objective_new(s, tpl.as_ptr(), var.as_ptr(), ptr::null(), 1.0, false, &mut obj);
        assert_eq!(st, WhittleStatus::InvalidArgument);
        assert!(last_error().contains("sideways"));

        let var = CString::new("blurred").unwrap();
        assert_eq!(
            whittle_objective_new(s, tpl.as_ptr(), var.as_ptr(), ptr::null(), 1.0, false, &mut obj),
            WhittleStatus::Ok
        );
        let mut v = 0.0;
        assert_eq!(whittle_objective_loglik(obj, [1.0].as_ptr(), 1, &mut v), WhittleStatus::InvalidArgument);
        assert_eq!(whittle_objective_loglik(obj, ptr::null(), 3, &mut v), WhittleStatus::NullPointer);
        whittle_objective_free(obj);
        whittle_series_free(s);

        // Null handles are accepted by the release functions.
        whittle_series_free(ptr::null_mut());
        whittle_fit_free(ptr::null_mut());
        assert_eq!(whittle_series_len(ptr::null()), 0);
        assert!(whittle_fit_loglik(ptr::null()).is_nan());
    }
}

#[test]
fn complex_series_values() {
    let (re, im) = ([1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]);
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(whittle_series_new_complex(re.as_ptr(), im.as_ptr(), 3, 1.0, &mut s), WhittleStatus::Ok);
        let (mut a, mut b) = ([0.0; 3], [0.0; 3]);
        assert_eq!(whittle_series_values(s, a.as_mut_ptr(), ptr::null_mut()), WhittleStatus::NullPointer);
        assert_eq!(whittle_series_values(s, a.as_mut_ptr(), b.as_mut_ptr()), WhittleStatus::Ok);
        assert_eq!((a, b), (re, im));
        whittle_series_free(s);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(whittle_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/whittle.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["whittle_fit", "whittle_objective_loglik", "whittle_last_error", "WHITTLE_STATUS_NOT_CONVERGED"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipped syntax check");
        return;
    };
    assert!(status.success());
}

#[test]
fn c_program_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libwhittle_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built; skipped");
        return;
    }
    let manifest = env!("CARGO_MANIFEST_DIR");
    let bin = profile_dir.join("whittle_c_smoke");
    let Ok(status) = std::process::Command::new("cc")
        .arg(format!("{manifest}/tests/c/smoke.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(status.success(), "C smoke program failed to build");
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let fields: Vec<f64> = String::from_utf8_lossy(&out.stdout)
        .split_whitespace()
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(fields.len(), 3);
}
