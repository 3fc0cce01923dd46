//! C ABI for the `rfsquid` simulator.
//!
//! Every fallible function returns an [`RfsqStatus`]; on failure the message
//! is kept per thread and can be read with [`rfsq_last_error`]. Configurations
//! and ensemble traces are opaque handles owned by the caller and released
//! with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rfsquid::analysis::fit_exponential;
use rfsquid::bloch::predict_d;
use rfsquid::config::{load_config_str, RunConfig};
use rfsquid::ensemble::PolarizationTrace;
use rfsquid::experiments::{build_frame, dephasing_experiment, oscillation_experiment, run_configured};
use rfsquid::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfsqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Numerical = 4,
    Io = 5,
    OutOfRange = 6,
    Panic = 7,
}

/// Run configuration handle.
pub struct RfsqConfig {
    inner: RunConfig,
}

/// Ensemble-averaged qubit trace handle.
pub struct RfsqTrace {
    inner: PolarizationTrace,
}

/// Qubit frame at zero bias.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RfsqFrame {
    pub v_x: f64,
    pub phi_c: f64,
    pub isolation: f64,
    /// Weight of the lowest levels in the top quarter of the basis.
    pub basis_tail: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
}

/// One time sample of a trace.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct RfsqSample {
    pub time: f64,
    pub rho11_energy: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub leakage: f64,
    pub stderr_rho11: f64,
}

/// Outcome of a fitted experiment. Fields that do not apply are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RfsqReport {
    pub d_fit: f64,
    pub d_pred: f64,
    pub relative_deviation: f64,
    pub leakage_max: f64,
    pub isolation: f64,
    pub endpoint_deviation: f64,
    pub bloch_rms: f64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> RfsqStatus {
    match err {
        Error::InvalidParameter { .. }
        | Error::Usage(_)
        | Error::Parse { .. }
        | Error::Validation { .. }
        | Error::Json(_) => RfsqStatus::Config,
        Error::Io(_) | Error::Csv(_) => RfsqStatus::Io,
        _ => RfsqStatus::Numerical,
    }
}

type Outcome = std::result::Result<(), (RfsqStatus, String)>;

fn fail(err: Error) -> (RfsqStatus, String) {
    (status_of(&err), err.to_string())
}

fn guard(f: impl FnOnce() -> Outcome) -> RfsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RfsqStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RfsqStatus::Panic
        }
    }
}

fn null(what: &str) -> (RfsqStatus, String) {
    (RfsqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> std::result::Result<&'a str, (RfsqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RfsqStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn config_ref<'a>(p: *const RfsqConfig) -> std::result::Result<&'a RunConfig, (RfsqStatus, String)> {
    p.as_ref().map(|c| &c.inner).ok_or_else(|| null("config"))
}

fn workers_opt(workers: usize) -> Option<usize> {
    (workers > 0).then_some(workers)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rfsq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the length the full message needs including
/// the terminator, or 0 if there is no error.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rfsq_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// `4 (V0 phi_c)^2 delta^2 / omega_c`.
///
/// # Safety
/// `out` must be null or a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn rfsq_predict_d(v0_phi_c: f64, delta: f64, omega_c: f64, out: *mut f64) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = predict_d(v0_phi_c, delta, omega_c).map_err(fail)?;
        Ok(())
    })
}

/// Built-in default configuration.
///
/// # Safety
/// `out` must be null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn rfsq_config_default(out: *mut *mut RfsqConfig) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = Box::into_raw(Box::new(RfsqConfig {
            inner: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Parse and validate a JSON configuration; missing fields take defaults.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` null or a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn rfsq_config_from_json(json: *const c_char, out: *mut *mut RfsqConfig) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = str_arg(json, "json")?;
        let loaded = load_config_str(text, "<json>").map_err(fail)?;
        *out = Box::into_raw(Box::new(RfsqConfig { inner: loaded.config }));
        Ok(())
    })
}

/// Fully resolved configuration as JSON. Release with [`rfsq_string_free`].
///
/// # Safety
/// `config` must be a live handle or null; `out` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsq_config_to_json(config: *const RfsqConfig, out: *mut *mut c_char) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let cfg = config_ref(config)?;
        let text = serde_json::to_string_pretty(cfg).map_err(|e| fail(e.into()))?;
        *out = CString::new(text).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfsq_config_free(config: *mut RfsqConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfsq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Qubit frame of the configured Hamiltonian at zero bias.
///
/// # Safety
/// `config` must be a live handle or null; `out` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsq_frame(config: *const RfsqConfig, out: *mut RfsqFrame) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (_, frame) = build_frame(config_ref(config)?).map_err(fail)?;
        let s = frame.summary();
        *out = RfsqFrame {
            v_x: s.v_x,
            phi_c: s.phi_c,
            isolation: s.isolation,
            basis_tail: s.basis_tail,
            e1: s.e1,
            e2: s.e2,
            e3: s.e3,
            e4: s.e4,
        };
        Ok(())
    })
}

/// Run the configured ensemble. `workers = 0` uses all cores; the result does
/// not depend on it.
///
/// # Safety
/// `config` must be a live handle or null; `out` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsq_ensemble_run(
    config: *const RfsqConfig,
    workers: usize,
    out: *mut *mut RfsqTrace,
) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let (_, trace, _) = run_configured(config_ref(config)?, workers_opt(workers)).map_err(fail)?;
        *out = Box::into_raw(Box::new(RfsqTrace { inner: trace }));
        Ok(())
    })
}

fn nan_report() -> RfsqReport {
    RfsqReport {
        d_fit: f64::NAN,
        d_pred: f64::NAN,
        relative_deviation: f64::NAN,
        leakage_max: f64::NAN,
        isolation: f64::NAN,
        endpoint_deviation: f64::NAN,
        bloch_rms: f64::NAN,
        passed: false,
    }
}

fn report_of(r: &rfsquid::analysis::ComparisonReport) -> RfsqReport {
    RfsqReport {
        d_fit: r.d_fit,
        d_pred: r.d_pred,
        relative_deviation: r.relative_deviation,
        leakage_max: r.leakage_max,
        isolation: r.frame.isolation,
        passed: r.passed,
        ..nan_report()
    }
}

/// Dephasing from the ground state with an exponential fit. `trace_out` may
/// be null if the trace is not wanted.
///
/// # Safety
/// `config` must be a live handle or null; `report` null or valid;
/// `trace_out` null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn rfsq_dephasing(
    config: *const RfsqConfig,
    workers: usize,
    report: *mut RfsqReport,
    trace_out: *mut *mut RfsqTrace,
) -> RfsqStatus {
    guard(|| {
        let report = report.as_mut().ok_or_else(|| null("report"))?;
        let run = dephasing_experiment(config_ref(config)?, workers_opt(workers)).map_err(fail)?;
        *report = RfsqReport {
            endpoint_deviation: run.endpoint_deviation,
            ..report_of(&run.report)
        };
        if let Some(slot) = trace_out.as_mut() {
            *slot = Box::into_raw(Box::new(RfsqTrace { inner: run.trace }));
        }
        Ok(())
    })
}

/// Damped oscillation from `|L>` with a damped-cosine fit and the Bloch
/// comparison.
///
/// # Safety
/// As for [`rfsq_dephasing`].
#[no_mangle]
pub unsafe extern "C" fn rfsq_oscillation(
    config: *const RfsqConfig,
    workers: usize,
    report: *mut RfsqReport,
    trace_out: *mut *mut RfsqTrace,
) -> RfsqStatus {
    guard(|| {
        let report = report.as_mut().ok_or_else(|| null("report"))?;
        let run = oscillation_experiment(config_ref(config)?, workers_opt(workers)).map_err(fail)?;
        *report = RfsqReport {
            bloch_rms: run.bloch_rms,
            ..report_of(&run.report)
        };
        if let Some(slot) = trace_out.as_mut() {
            *slot = Box::into_raw(Box::new(RfsqTrace { inner: run.trace }));
        }
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rfsq_trace_len(trace: *const RfsqTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.len())
}

/// # Safety
/// `trace` must be null or a live handle; `out` null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rfsq_trace_sample(trace: *const RfsqTrace, index: usize, out: *mut RfsqSample) -> RfsqStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t = &trace.as_ref().ok_or_else(|| null("trace"))?.inner;
        if index >= t.len() {
            return Err((
                RfsqStatus::OutOfRange,
                format!("sample {index} out of range ({} samples)", t.len()),
            ));
        }
        let p = t.p_vec[index];
        *out = RfsqSample {
            time: t.times[index],
            rho11_energy: t.rho11_energy[index],
            p_x: p[0],
            p_y: p[1],
            p_z: p[2],
            leakage: t.leakage_avg[index],
            stderr_rho11: t.stderr_rho11[index],
        };
        Ok(())
    })
}

/// Write the trace in the CLI's ensemble CSV format.
///
/// # Safety
/// `trace` must be null or a live handle; `path` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rfsq_trace_write_csv(trace: *const RfsqTrace, path: *const c_char) -> RfsqStatus {
    guard(|| {
        let t = &trace.as_ref().ok_or_else(|| null("trace"))?.inner;
        let path = str_arg(path, "path")?;
        let file = rfsquid::io::create_file(Path::new(path)).map_err(fail)?;
        rfsquid::io::write_ensemble_csv(t, file).map_err(fail)
    })
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rfsq_trace_free(trace: *mut RfsqTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Fit `rho11 = (1 + A exp(-D t)) / 2`, weighted by the per-point standard
/// error `sigma` unless it is null.
///
/// # Safety
/// `times` and `rho11` (and `sigma` if non-null) must point to `n` doubles;
/// `d_out` and `amplitude_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rfsq_fit_exponential(
    times: *const f64,
    rho11: *const f64,
    sigma: *const f64,
    n: usize,
    d_out: *mut f64,
    amplitude_out: *mut f64,
) -> RfsqStatus {
    guard(|| {
        if times.is_null() || rho11.is_null() {
            return Err(null("series"));
        }
        let d_out = d_out.as_mut().ok_or_else(|| null("d_out"))?;
        let a_out = amplitude_out.as_mut().ok_or_else(|| null("amplitude_out"))?;
        let t = std::slice::from_raw_parts(times, n);
        let r = std::slice::from_raw_parts(rho11, n);
        let w = (!sigma.is_null()).then(|| std::slice::from_raw_parts(sigma, n));
        let fit = fit_exponential(t, r, w).map_err(fail)?;
        *d_out = fit.get("d").unwrap_or(f64::NAN);
        *a_out = fit.get("amplitude").unwrap_or(f64::NAN);
        Ok(())
    })
}
