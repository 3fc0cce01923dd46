use std::ffi::{CStr, CString};
use std::ptr;

use rfsquid_ffi::*;

const SMALL: &str = r#"{"basis": {"n_basis": 48},
  "ensemble": {"n_realizations": 4, "master_seed": 3, "total_time": 100.0, "sample_every": 10}}"#;

fn last_error() -> String {
    unsafe {
        let need = rfsq_last_error(ptr::null_mut(), 0);
        let mut buf = vec![0 as std::ffi::c_char; need.max(1)];
        rfsq_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn small_config() -> *mut RfsqConfig {
    let json = CString::new(SMALL).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rfsq_config_from_json(json.as_ptr(), &mut cfg) }, RfsqStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn predict_d_value() {
    let mut d = 0.0;
    assert_eq!(unsafe { rfsq_predict_d(14.149, 0.00032, 0.05, &mut d) }, RfsqStatus::Ok);
    assert_eq!(format!("{d:.5}"), "0.00164");
    assert_eq!(unsafe { rfsq_predict_d(14.149, 0.00032, 0.0, &mut d) }, RfsqStatus::Config);
    assert!(last_error().contains("omega_c"));
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(rfsq_predict_d(1.0, 1.0, 1.0, ptr::null_mut()), RfsqStatus::NullPointer);
        assert!(last_error().contains("null"));
        let mut cfg = ptr::null_mut();
        assert_eq!(rfsq_config_from_json(ptr::null(), &mut cfg), RfsqStatus::NullPointer);
        let mut frame = RfsqFrame::default();
        assert_eq!(rfsq_frame(ptr::null(), &mut frame), RfsqStatus::NullPointer);
        assert_eq!(rfsq_trace_len(ptr::null()), 0);
        rfsq_config_free(ptr::null_mut());
        rfsq_trace_free(ptr::null_mut());
        rfsq_string_free(ptr::null_mut());
    }
}

#[test]
fn bad_json_names_the_field() {
    let json = CString::new(r#"{"hamiltonian": {"mu": -2.0}}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { rfsq_config_from_json(json.as_ptr(), &mut cfg) }, RfsqStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("hamiltonian.mu"));
}

#[test]
fn error_is_cleared_by_success() {
    let mut d = 0.0;
    unsafe {
        rfsq_predict_d(1.0, 1.0, -1.0, &mut d);
        assert!(rfsq_last_error(ptr::null_mut(), 0) > 0);
        rfsq_predict_d(1.0, 1.0, 1.0, &mut d);
        assert_eq!(rfsq_last_error(ptr::null_mut(), 0), 0);
    }
}

#[test]
fn truncated_error_buffer_is_terminated() {
    let mut d = 0.0;
    unsafe {
        rfsq_predict_d(1.0, 1.0, -1.0, &mut d);
        let mut buf = [1 as std::ffi::c_char; 4];
        let need = rfsq_last_error(buf.as_mut_ptr(), buf.len());
        assert!(need > 4);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn config_round_trips_through_json() {
    let cfg = small_config();
    unsafe {
        let mut text = ptr::null_mut();
        assert_eq!(rfsq_config_to_json(cfg, &mut text), RfsqStatus::Ok);
        let json = CStr::from_ptr(text).to_owned();
        rfsq_string_free(text);
        let mut again = ptr::null_mut();
        assert_eq!(rfsq_config_from_json(json.as_ptr(), &mut again), RfsqStatus::Ok);
        let mut text2 = ptr::null_mut();
        rfsq_config_to_json(again, &mut text2);
        assert_eq!(CStr::from_ptr(text2), json.as_c_str());
        rfsq_string_free(text2);
        rfsq_config_free(again);
        rfsq_config_free(cfg);
    }
}

#[test]
fn ensemble_trace_accessors() {
    let cfg = small_config();
    unsafe {
        let mut frame = RfsqFrame::default();
        assert_eq!(rfsq_frame(cfg, &mut frame), RfsqStatus::Ok);
        assert!(frame.v_x > 0.0 && frame.isolation > 20.0);

        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        assert_eq!(rfsq_ensemble_run(cfg, 1, &mut a), RfsqStatus::Ok);
        assert_eq!(rfsq_ensemble_run(cfg, 2, &mut b), RfsqStatus::Ok);
        let n = rfsq_trace_len(a);
        assert_eq!(n, 21);
        assert_eq!(rfsq_trace_len(b), n);
        for i in 0..n {
            let (mut sa, mut sb) = (RfsqSample::default(), RfsqSample::default());
            assert_eq!(rfsq_trace_sample(a, i, &mut sa), RfsqStatus::Ok);
            rfsq_trace_sample(b, i, &mut sb);
            assert_eq!(sa.p_x.to_bits(), sb.p_x.to_bits());
            assert_eq!(sa.time, i as f64 * 5.0);
            assert!((sa.rho11_energy - 0.5 * (1.0 + sa.p_x)).abs() < 1e-15);
        }
        let mut s = RfsqSample::default();
        assert_eq!(rfsq_trace_sample(a, n, &mut s), RfsqStatus::OutOfRange);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("t.csv").to_str().unwrap()).unwrap();
        assert_eq!(rfsq_trace_write_csv(a, path.as_ptr()), RfsqStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(csv.lines().count(), n + 1);

        rfsq_trace_free(a);
        rfsq_trace_free(b);
        rfsq_config_free(cfg);
    }
}

#[test]
fn experiments_fill_reports() {
    let cfg = small_config();
    unsafe {
        let mut report = RfsqReport {
            d_fit: 0.0,
            d_pred: 0.0,
            relative_deviation: 0.0,
            leakage_max: 0.0,
            isolation: 0.0,
            endpoint_deviation: 0.0,
            bloch_rms: 0.0,
            passed: false,
        };
        let status = rfsq_dephasing(cfg, 1, &mut report, ptr::null_mut());
        // 100 time units is far short of 1/D: the fit may legitimately fail
        if status == RfsqStatus::Ok {
            assert!(report.d_pred > 0.0);
            assert!(report.bloch_rms.is_nan());
            assert!(report.endpoint_deviation.is_finite());
        } else {
            assert_eq!(status, RfsqStatus::Numerical, "{}", last_error());
        }
        rfsq_config_free(cfg);
    }
}

#[test]
fn exponential_fit_over_arrays() {
    let t: Vec<f64> = (0..=200).map(|k| k as f64 * 10.0).collect();
    let rho: Vec<f64> = t.iter().map(|t| 0.5 * (1.0 + (-0.00175 * t).exp())).collect();
    let (mut d, mut a) = (0.0, 0.0);
    let status = unsafe { rfsq_fit_exponential(t.as_ptr(), rho.as_ptr(), ptr::null(), t.len(), &mut d, &mut a) };
    assert_eq!(status, RfsqStatus::Ok);
    assert!((d / 0.00175 - 1.0).abs() < 1e-6);
    assert!((a - 1.0).abs() < 1e-6);
    let flat = vec![0.5; t.len()];
    let status = unsafe { rfsq_fit_exponential(t.as_ptr(), flat.as_ptr(), ptr::null(), t.len(), &mut d, &mut a) };
    assert_eq!(status, RfsqStatus::Numerical);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(rfsq_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
