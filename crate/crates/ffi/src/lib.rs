//! C interface to histgen: run generations, audit and summarize histories.
//!
//! Every entry point returns a [`HistgenStatus`]. On failure the message is
//! kept per thread and read with [`histgen_last_error`]. Handles and strings
//! returned by the library are released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use histgen::history::{validate_history, ValidationReport};
use histgen::report::{collect_metrics, write_csv, write_long};
use histgen::runner::{run, Preset, RunConfig};
use histgen::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistgenStatus {
    Ok = 0,
    /// A null pointer or non-UTF-8 string was passed.
    InvalidArgument = 1,
    /// Bad configuration, inputs or initial system.
    Config = 2,
    /// Writing or reading a history failed.
    Io = 3,
    /// The directory is not a readable history.
    InvalidHistory = 4,
    /// A panic was caught at the boundary.
    Internal = 5,
}

/// Opaque run configuration.
pub struct HistgenConfig {
    inner: RunConfig,
}

/// Opaque validation report.
pub struct HistgenReport {
    inner: ValidationReport,
}

/// Counters of a finished generation.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HistgenRunSummary {
    pub iterations: u64,
    pub committed: u64,
    pub skipped: u64,
    pub rolled_back: u64,
    pub consumed_tests: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> HistgenStatus {
    match e {
        Error::InvalidHistory(_) => HistgenStatus::InvalidHistory,
        e if e.is_io() => HistgenStatus::Io,
        _ => HistgenStatus::Config,
    }
}

fn fail(status: HistgenStatus, msg: impl Into<String>) -> HistgenStatus {
    set_error(msg);
    status
}

/// Runs `f` with panics turned into `Internal`.
fn guard(f: impl FnOnce() -> HistgenStatus) -> HistgenStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(HistgenStatus::Internal, msg)
        }
    }
}

/// # Safety
/// `s` is null or a NUL-terminated string.
unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, HistgenStatus> {
    if s.is_null() {
        return Err(fail(HistgenStatus::InvalidArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(HistgenStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn give_string(s: String, out: *mut *mut c_char) -> HistgenStatus {
    match CString::new(s) {
        Ok(c) => {
            // SAFETY: callers check `out` for null before producing `s`.
            unsafe { *out = c.into_raw() };
            HistgenStatus::Ok
        }
        Err(_) => fail(HistgenStatus::Internal, "output contains NUL"),
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn histgen_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Configuration of a named preset (`uniform-generators`,
/// `uniform-operations` or `growing-system`).
///
/// # Safety
/// `name` is a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histgen_config_from_preset(name: *const c_char, out: *mut *mut HistgenConfig) -> HistgenStatus {
    guard(|| {
        if out.is_null() {
            return fail(HistgenStatus::InvalidArgument, "out is null");
        }
        let name = match text(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        match name.parse::<Preset>() {
            Ok(p) => {
                *out = Box::into_raw(Box::new(HistgenConfig { inner: p.config() }));
                HistgenStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Parses a TOML configuration overlaid on `growing-system`.
///
/// # Safety
/// `toml` is a NUL-terminated string; `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histgen_config_from_toml(toml: *const c_char, out: *mut *mut HistgenConfig) -> HistgenStatus {
    guard(|| {
        if out.is_null() {
            return fail(HistgenStatus::InvalidArgument, "out is null");
        }
        let body = match text(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::from_toml(body, Some(Preset::GrowingSystem)) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(HistgenConfig { inner: c }));
                HistgenStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` is a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn histgen_config_set_seed(config: *mut HistgenConfig, seed: u64) -> HistgenStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.seed = seed;
            HistgenStatus::Ok
        }
        None => fail(HistgenStatus::InvalidArgument, "config is null"),
    })
}

/// # Safety
/// `config` is a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn histgen_config_set_max_iterations(config: *mut HistgenConfig, n: u64) -> HistgenStatus {
    guard(|| match config.as_mut() {
        Some(c) => {
            c.inner.max_iterations = n;
            HistgenStatus::Ok
        }
        None => fail(HistgenStatus::InvalidArgument, "config is null"),
    })
}

/// # Safety
/// `config` is null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn histgen_config_free(config: *mut HistgenConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Generates a history into `out_dir`, which must be absent or empty.
/// `summary` may be null.
///
/// # Safety
/// Strings are NUL-terminated; `donors` holds `donor_count` of them (or is
/// null when the count is 0).
#[no_mangle]
pub unsafe extern "C" fn histgen_generate(
    config: *const HistgenConfig,
    system_dir: *const c_char,
    donors: *const *const c_char,
    donor_count: usize,
    out_dir: *const c_char,
    summary: *mut HistgenRunSummary,
) -> HistgenStatus {
    guard(|| {
        let Some(cfg) = config.as_ref() else {
            return fail(HistgenStatus::InvalidArgument, "config is null");
        };
        let system = match text(system_dir, "system_dir") {
            Ok(s) => PathBuf::from(s),
            Err(s) => return s,
        };
        let out = match text(out_dir, "out_dir") {
            Ok(s) => PathBuf::from(s),
            Err(s) => return s,
        };
        if donors.is_null() && donor_count > 0 {
            return fail(HistgenStatus::InvalidArgument, "donors is null");
        }
        let mut donor_paths = Vec::with_capacity(donor_count);
        for i in 0..donor_count {
            match text(*donors.add(i), "donor") {
                Ok(d) => donor_paths.push(PathBuf::from(d)),
                Err(s) => return s,
            }
        }
        match run(&cfg.inner, &system, &donor_paths, &out) {
            Ok(s) => {
                if let Some(dst) = summary.as_mut() {
                    *dst = HistgenRunSummary {
                        iterations: s.iterations,
                        committed: s.committed,
                        skipped: s.skipped,
                        rolled_back: s.rolled_back,
                        consumed_tests: s.consumed_tests,
                    };
                }
                HistgenStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Audits a history directory. The call succeeds even when violations are
/// found; inspect the report.
///
/// # Safety
/// `out_dir` is NUL-terminated; `report` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histgen_validate(out_dir: *const c_char, report: *mut *mut HistgenReport) -> HistgenStatus {
    guard(|| {
        if report.is_null() {
            return fail(HistgenStatus::InvalidArgument, "report is null");
        }
        let dir = match text(out_dir, "out_dir") {
            Ok(s) => PathBuf::from(s),
            Err(s) => return s,
        };
        *report = Box::into_raw(Box::new(HistgenReport {
            inner: validate_history(&dir),
        }));
        HistgenStatus::Ok
    })
}

/// Number of violations in a report; 0 for a null handle.
///
/// # Safety
/// `report` is null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn histgen_report_violation_count(report: *const HistgenReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.violations.len())
}

/// The report as JSON; release with `histgen_string_free`.
///
/// # Safety
/// `report` is a handle from this library; `json` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histgen_report_json(report: *const HistgenReport, json: *mut *mut c_char) -> HistgenStatus {
    guard(|| {
        let Some(r) = report.as_ref() else {
            return fail(HistgenStatus::InvalidArgument, "report is null");
        };
        if json.is_null() {
            return fail(HistgenStatus::InvalidArgument, "json is null");
        }
        match serde_json::to_string_pretty(&r.inner) {
            Ok(s) => give_string(s, json),
            Err(e) => fail(HistgenStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `report` is null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn histgen_report_free(report: *mut HistgenReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Per-revision metrics as CSV (`long_format` selects the
/// `revision,metric,key,value` layout); release with `histgen_string_free`.
///
/// # Safety
/// `out_dir` is NUL-terminated; `csv` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn histgen_stats(out_dir: *const c_char, long_format: bool, csv: *mut *mut c_char) -> HistgenStatus {
    guard(|| {
        if csv.is_null() {
            return fail(HistgenStatus::InvalidArgument, "csv is null");
        }
        let dir = match text(out_dir, "out_dir") {
            Ok(s) => PathBuf::from(s),
            Err(s) => return s,
        };
        let rows = match collect_metrics(&dir) {
            Ok(r) => r,
            Err(e) => return fail(status_of(&e), e.to_string()),
        };
        let mut buf = Vec::new();
        let written = if long_format {
            write_long(&rows, &mut buf)
        } else {
            write_csv(&rows, &mut buf)
        };
        if let Err(e) = written {
            return fail(HistgenStatus::Io, e.to_string());
        }
        give_string(String::from_utf8(buf).expect("metrics are UTF-8"), csv)
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn histgen_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
