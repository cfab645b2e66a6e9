//! C ABI for the projector kernel library.
//!
//! Conventions:
//!
//! * Every fallible function returns a [`PpxStatus`]; `PPX_STATUS_OK` is
//!   zero. On failure a human-readable message is stored in thread-local
//!   storage and can be read with [`ppx_last_error`].
//! * Strings returned through `char **` out-parameters are heap-allocated
//!   and must be released with [`ppx_string_free`]. Strings returned as
//!   `const char *` ([`ppx_version`], [`ppx_last_error`]) are borrowed and
//!   must not be freed.
//! * Structured inputs and outputs are JSON documents with the same
//!   schemas the command line front end reads and writes; CSV output uses
//!   full-precision scientific notation.
//! * The kernel handle [`PpxTheta`] is opaque; create with
//!   [`ppx_theta_new`], release with [`ppx_theta_free`].
//!
//! The committed header `include/plancherel_projectors.h` is generated
//! from this file by the build script (cbindgen).

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{CStr, CString};

use libc::c_char;

use plancherel_projectors::cli::{
    lambda_fourier_csv, lambda_terms_json, parse_theta_data, run_suites, theta_audit, RunConfig,
    RunError,
};
use plancherel_projectors::kernels::ExpPoly;
use plancherel_projectors::projectors::{build_theta, ThetaKernel};

/// Result of a C ABI call. Zero is success; nonzero codes split failures
/// the same way the command line exit codes do.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpxStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Invalid input: malformed UTF-8 or JSON, unknown suite name,
    /// parameters outside the supported envelope.
    InvalidArgument = 2,
    /// A numeric computation failed (quadrature breakdown or internal
    /// evaluation error).
    NumericFailure = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(status: PpxStatus, message: &str) -> PpxStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn clear_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

fn status_of(e: &RunError) -> PpxStatus {
    match e {
        RunError::Usage(_) => PpxStatus::InvalidArgument,
        RunError::Numeric(_) => PpxStatus::NumericFailure,
    }
}

/// Writes `text` to the out-parameter as a heap C string. JSON and CSV
/// documents never contain interior nuls; if one ever did, it is rejected
/// rather than truncated.
fn emit_string(text: String, out: *mut *mut c_char) -> PpxStatus {
    match CString::new(text) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            PpxStatus::Ok
        }
        Err(_) => set_error(
            PpxStatus::NumericFailure,
            "output contained an interior nul byte",
        ),
    }
}

/// # Safety
/// `ptr` must be null or a valid nul-terminated C string.
unsafe fn read_utf8<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, PpxStatus> {
    if ptr.is_null() {
        return Err(set_error(
            PpxStatus::NullArgument,
            &format!("{what} pointer is null"),
        ));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(
            PpxStatus::InvalidArgument,
            &format!("{what} is not valid UTF-8"),
        )
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ppx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread, empty if the
/// last call succeeded. Borrowed; valid until the next library call on the
/// same thread. Do not free.
#[no_mangle]
pub extern "C" fn ppx_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned through a `char **` out-parameter. Null is
/// accepted and ignored.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library
/// through a `char **` out-parameter, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ppx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs verification suites selected by a flat JSON configuration document
/// (same schema as the command line config file; `name` is required and
/// may be `"all"`). On success writes a JSON document
/// `{"all_pass": bool, "config": {...}, "suites": [{"name", "pass",
/// "report"}, ...]}` to `out_json`.
///
/// A suite that runs to completion but fails its criteria is still a
/// successful call: inspect `all_pass` and the per-suite reports.
///
/// # Safety
/// `config_json` must be a valid nul-terminated C string; `out_json` must
/// be a valid pointer. The returned string must be freed with
/// [`ppx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppx_suite_run(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PpxStatus {
    clear_error();
    if out_json.is_null() {
        return set_error(PpxStatus::NullArgument, "out_json pointer is null");
    }
    let text = match read_utf8(config_json, "config_json") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let cfg: RunConfig = match serde_json::from_str(text) {
        Ok(c) => c,
        Err(e) => {
            return set_error(PpxStatus::InvalidArgument, &format!("config document: {e}"));
        }
    };
    let (snapshot, entries) = match run_suites(&cfg) {
        Ok(v) => v,
        Err(e) => return set_error(status_of(&e), e.message()),
    };
    let all_pass = entries.iter().all(|(_, r)| r.pass);
    let suites: Vec<serde_json::Value> = entries
        .iter()
        .map(|(name, report)| {
            serde_json::json!({"name": name, "pass": report.pass, "report": report})
        })
        .collect();
    let doc = serde_json::json!({"all_pass": all_pass, "config": snapshot, "suites": suites});
    match serde_json::to_string_pretty(&doc) {
        Ok(mut s) => {
            s.push('\n');
            emit_string(s, out_json)
        }
        Err(e) => set_error(
            PpxStatus::NumericFailure,
            &format!("serialization failed: {e}"),
        ),
    }
}

/// Writes the permutation-sum term table of the torus distribution as a
/// JSON document to `out_json`.
///
/// # Safety
/// `out_json` must be a valid pointer. The returned string must be freed
/// with [`ppx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppx_lambda_terms(p: usize, out_json: *mut *mut c_char) -> PpxStatus {
    clear_error();
    if out_json.is_null() {
        return set_error(PpxStatus::NullArgument, "out_json pointer is null");
    }
    match lambda_terms_json(p) {
        Ok((text, _)) => emit_string(text, out_json),
        Err(e) => set_error(status_of(&e), e.message()),
    }
}

/// Writes the Fourier coefficients of the torus distribution over the
/// index box `|a_j| <= a_bound` as CSV (17 significant digits) to
/// `out_csv`.
///
/// # Safety
/// `out_csv` must be a valid pointer. The returned string must be freed
/// with [`ppx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppx_lambda_fourier(
    p: usize,
    a_bound: i64,
    out_csv: *mut *mut c_char,
) -> PpxStatus {
    clear_error();
    if out_csv.is_null() {
        return set_error(PpxStatus::NullArgument, "out_csv pointer is null");
    }
    match lambda_fourier_csv(p, a_bound) {
        Ok((text, _)) => emit_string(text, out_csv),
        Err(e) => set_error(status_of(&e), e.message()),
    }
}

/// Opaque handle to an assembled chart-weighted kernel at rank `n` with
/// projector index `r`. Build once, apply to many data documents.
pub struct PpxTheta {
    kernel: ThetaKernel,
}

/// Builds a kernel handle. On success writes the handle to `out`; release
/// it with [`ppx_theta_free`].
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ppx_theta_new(n: usize, r: usize, out: *mut *mut PpxTheta) -> PpxStatus {
    clear_error();
    if out.is_null() {
        return set_error(PpxStatus::NullArgument, "out pointer is null");
    }
    if n == 0 {
        return set_error(PpxStatus::InvalidArgument, "n must be positive");
    }
    match build_theta(n, r) {
        Ok(kernel) => {
            *out = Box::into_raw(Box::new(PpxTheta { kernel }));
            PpxStatus::Ok
        }
        Err(e) => set_error(PpxStatus::InvalidArgument, &e.to_string()),
    }
}

/// Releases a kernel handle. Null is accepted and ignored.
///
/// # Safety
/// `handle` must be null or a pointer returned by [`ppx_theta_new`], not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn ppx_theta_free(handle: *mut PpxTheta) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

fn parse_handle_data(
    handle: &PpxTheta,
    text: &str,
) -> Result<BTreeMap<usize, ExpPoly>, (PpxStatus, String)> {
    parse_theta_data(handle.kernel.n, text).map_err(|e| (status_of(&e), e.message().to_string()))
}

/// Applies the kernel to a JSON data document (object mapping chart index
/// to an exponential-polynomial) and writes the paired value to
/// `out_re`/`out_im`.
///
/// # Safety
/// `handle` must be a live pointer from [`ppx_theta_new`]; `data_json`
/// must be a valid nul-terminated C string; `out_re` and `out_im` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ppx_theta_apply(
    handle: *const PpxTheta,
    data_json: *const c_char,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PpxStatus {
    clear_error();
    if handle.is_null() {
        return set_error(PpxStatus::NullArgument, "handle pointer is null");
    }
    if out_re.is_null() || out_im.is_null() {
        return set_error(PpxStatus::NullArgument, "output pointer is null");
    }
    let text = match read_utf8(data_json, "data_json") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let handle = &*handle;
    let data = match parse_handle_data(handle, text) {
        Ok(d) => d,
        Err((status, msg)) => return set_error(status, &msg),
    };
    match theta_audit(&handle.kernel, &data) {
        Ok((value, _)) => {
            *out_re = value.re;
            *out_im = value.im;
            PpxStatus::Ok
        }
        Err(e) => set_error(status_of(&e), e.message()),
    }
}

/// Like [`ppx_theta_apply`], but writes the full per-chart audit document
/// (weights, raw pairings, weighted contributions, total value) as JSON to
/// `out_json`.
///
/// # Safety
/// `handle` must be a live pointer from [`ppx_theta_new`]; `data_json`
/// must be a valid nul-terminated C string; `out_json` must be a valid
/// pointer. The returned string must be freed with [`ppx_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppx_theta_audit(
    handle: *const PpxTheta,
    data_json: *const c_char,
    out_json: *mut *mut c_char,
) -> PpxStatus {
    clear_error();
    if handle.is_null() {
        return set_error(PpxStatus::NullArgument, "handle pointer is null");
    }
    if out_json.is_null() {
        return set_error(PpxStatus::NullArgument, "out_json pointer is null");
    }
    let text = match read_utf8(data_json, "data_json") {
        Ok(t) => t,
        Err(status) => return status,
    };
    let handle = &*handle;
    let data = match parse_handle_data(handle, text) {
        Ok(d) => d,
        Err((status, msg)) => return set_error(status, &msg),
    };
    match theta_audit(&handle.kernel, &data) {
        Ok((_, audit)) => match serde_json::to_string_pretty(&audit) {
            Ok(mut s) => {
                s.push('\n');
                emit_string(s, out_json)
            }
            Err(e) => set_error(
                PpxStatus::NumericFailure,
                &format!("serialization failed: {e}"),
            ),
        },
        Err(e) => set_error(status_of(&e), e.message()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;
    use std::ptr;

    fn cstr(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    unsafe fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let s = CStr::from_ptr(ptr).to_str().unwrap().to_string();
        ppx_string_free(ptr);
        s
    }

    fn last_error_text() -> String {
        unsafe {
            CStr::from_ptr(ppx_last_error())
                .to_str()
                .unwrap()
                .to_string()
        }
    }

    #[test]
    fn version_is_a_static_semver_string() {
        let v = unsafe { CStr::from_ptr(ppx_version()) }.to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
        assert!(v.split('.').count() >= 2);
    }

    #[test]
    fn suite_run_roundtrips_json() {
        let cfg = cstr(r#"{"name": "matchings", "p": 6}"#);
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { ppx_suite_run(cfg.as_ptr(), &mut out) };
        assert_eq!(status, PpxStatus::Ok);
        let doc: Value = serde_json::from_str(&unsafe { take_string(out) }).unwrap();
        assert_eq!(doc["all_pass"], serde_json::json!(true));
        assert_eq!(doc["suites"][0]["name"], serde_json::json!("matchings"));
        assert_eq!(
            doc["suites"][0]["report"]["params"]["p_max"],
            serde_json::json!(6)
        );
        assert_eq!(last_error_text(), "");
    }

    #[test]
    fn suite_run_rejects_bad_inputs_with_messages() {
        let mut out: *mut c_char = ptr::null_mut();

        let status = unsafe { ppx_suite_run(ptr::null(), &mut out) };
        assert_eq!(status, PpxStatus::NullArgument);
        assert!(last_error_text().contains("null"));

        let cfg = cstr(r#"{"name": "bogus"}"#);
        let status = unsafe { ppx_suite_run(cfg.as_ptr(), &mut out) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        assert!(last_error_text().contains("unknown suite"));

        let cfg = cstr("not json");
        let status = unsafe { ppx_suite_run(cfg.as_ptr(), &mut out) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        assert!(last_error_text().contains("config document"));

        // Out-of-envelope parameters are invalid arguments, not crashes.
        let cfg = cstr(r#"{"name": "matchings", "p": 99}"#);
        let status = unsafe { ppx_suite_run(cfg.as_ptr(), &mut out) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        assert!(last_error_text().contains("cost guard"));
    }

    #[test]
    fn lambda_terms_and_fourier_match_the_front_end_formats() {
        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { ppx_lambda_terms(2, &mut out) };
        assert_eq!(status, PpxStatus::Ok);
        let table: Value = serde_json::from_str(&unsafe { take_string(out) }).unwrap();
        assert_eq!(table["terms"].as_array().unwrap().len(), 2);

        let status = unsafe { ppx_lambda_fourier(1, 2, &mut out) };
        assert_eq!(status, PpxStatus::Ok);
        let csv = unsafe { take_string(out) };
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "a1,re,im");
        assert_eq!(lines.len(), 1 + 5);

        let status = unsafe { ppx_lambda_terms(99, &mut out) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        let status = unsafe { ppx_lambda_fourier(9, 200, &mut out) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        assert!(last_error_text().contains("capped"));
    }

    #[test]
    fn theta_handle_lifecycle_and_application() {
        let mut handle: *mut PpxTheta = ptr::null_mut();
        let status = unsafe { ppx_theta_new(2, 1, &mut handle) };
        assert_eq!(status, PpxStatus::Ok);
        assert!(!handle.is_null());

        // Pair-chart Gaussian data pairs to the chart weight 1/2.
        let data = cstr(
            r#"{"1": {"n": 2, "k": 1, "terms": [{
                "coeff": [1.0, 0.0],
                "phi_freq": [],
                "theta_freq": [[3.0, 0.0]],
                "mu": [[0.0, 0.0]],
                "gauss": [0.7],
                "poly": [[[0], [1.0, 0.0]]]
            }]}}"#,
        );
        let (mut re, mut im) = (f64::NAN, f64::NAN);
        let status = unsafe { ppx_theta_apply(handle, data.as_ptr(), &mut re, &mut im) };
        assert_eq!(status, PpxStatus::Ok, "{}", last_error_text());
        assert!((re - 0.5).abs() < 1e-12 && im.abs() < 1e-12);

        let mut out: *mut c_char = ptr::null_mut();
        let status = unsafe { ppx_theta_audit(handle, data.as_ptr(), &mut out) };
        assert_eq!(status, PpxStatus::Ok);
        let audit: Value = serde_json::from_str(&unsafe { take_string(out) }).unwrap();
        assert_eq!(audit["charts"].as_array().unwrap().len(), 2);
        assert!((audit["value"][0].as_f64().unwrap() - 0.5).abs() < 1e-12);

        // Wrong chart labels inside the data are invalid arguments.
        let bad = cstr(r#"{"1": {"n": 2, "k": 0, "terms": []}}"#);
        let status = unsafe { ppx_theta_apply(handle, bad.as_ptr(), &mut re, &mut im) };
        assert_eq!(status, PpxStatus::InvalidArgument);

        unsafe { ppx_theta_free(handle) };
        unsafe { ppx_theta_free(ptr::null_mut()) };

        // Out-of-range projector index is rejected at construction.
        let status = unsafe { ppx_theta_new(2, 2, &mut handle) };
        assert_eq!(status, PpxStatus::InvalidArgument);
        let status = unsafe { ppx_theta_new(0, 0, &mut handle) };
        assert_eq!(status, PpxStatus::InvalidArgument);
    }

    #[test]
    fn string_free_accepts_null() {
        unsafe { ppx_string_free(ptr::null_mut()) };
    }

    #[test]
    fn empty_data_document_pairs_to_zero() {
        let mut handle: *mut PpxTheta = ptr::null_mut();
        assert_eq!(unsafe { ppx_theta_new(2, 1, &mut handle) }, PpxStatus::Ok);
        let data = cstr("{}");
        let (mut re, mut im) = (f64::NAN, f64::NAN);
        let status = unsafe { ppx_theta_apply(handle, data.as_ptr(), &mut re, &mut im) };
        assert_eq!(status, PpxStatus::Ok);
        assert_eq!((re, im), (0.0, 0.0));
        unsafe { ppx_theta_free(handle) };
    }
}
