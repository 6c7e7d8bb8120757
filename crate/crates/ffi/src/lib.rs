//! C ABI over the socnav toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Strings returned through `char **`
//! out-parameters are NUL-terminated UTF-8 owned by the caller and released
//! with [`socnav_string_free`]. Every entry point returns a [`SocnavStatus`];
//! on failure a description is available from [`socnav_last_error`] on the
//! same thread until the next call. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use socnav::ingest;
use socnav::metrics::{self, MetricReport, Scalar};
use socnav::model::{Episode, MetricParams};
use socnav::scenarios::{self, CardRegistry};
use socnav::sim;

/// A parsed or simulated episode.
pub struct SocnavEpisode(Episode);

/// A computed metric report.
pub struct SocnavReport(MetricReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SocnavStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    ComputeError = 5,
    UnknownScenario = 6,
    NotFound = 7,
    /// The metric exists but is undefined for this episode.
    Undefined = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(SocnavStatus, String);

fn fail<T>(status: SocnavStatus, message: impl std::fmt::Display) -> Result<T, Failure> {
    Err(Failure(status, message.to_string()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SocnavStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SocnavStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SocnavStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(SocnavStatus::NullArgument, format!("{name} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(SocnavStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn bytes_arg<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if data.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return fail(SocnavStatus::NullArgument, "data is null");
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(
        || fail(SocnavStatus::NullArgument, format!("{name} is null")),
        Ok,
    )
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        return fail(SocnavStatus::NullArgument, format!("{name} is null"));
    }
    Ok(())
}

fn into_c_string(bytes: Vec<u8>) -> Result<*mut c_char, Failure> {
    CString::new(bytes)
        .map(CString::into_raw)
        .or_else(|_| fail(SocnavStatus::ComputeError, "output contains NUL"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn socnav_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread; empty after success.
/// Valid until the next socnav call on the same thread.
#[no_mangle]
pub extern "C" fn socnav_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socnav_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an episode document of `len` bytes.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_episode_parse(
    data: *const u8,
    len: usize,
    out: *mut *mut SocnavEpisode,
) -> SocnavStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let bytes = bytes_arg(data, len)?;
        let ep = ingest::parse_episode(bytes).or_else(|e| fail(SocnavStatus::ParseError, e))?;
        *out = Box::into_raw(Box::new(SocnavEpisode(ep)));
        Ok(())
    })
}

/// Writes the canonical serialization of `episode` to `out_json`.
///
/// # Safety
/// `episode` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_episode_serialize(
    episode: *const SocnavEpisode,
    out_json: *mut *mut c_char,
) -> SocnavStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let ep = ref_arg(episode, "episode")?;
        *out_json = into_c_string(ingest::serialize_episode(&ep.0))?;
        Ok(())
    })
}

/// # Safety
/// `episode` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_episode_agent_count(
    episode: *const SocnavEpisode,
    out: *mut usize,
) -> SocnavStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ref_arg(episode, "episode")?.0.agents.len();
        Ok(())
    })
}

/// # Safety
/// `episode` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socnav_episode_free(episode: *mut SocnavEpisode) {
    if !episode.is_null() {
        drop(Box::from_raw(episode));
    }
}

/// Simulates the named scenario layout with the given variation seed.
///
/// # Safety
/// `scenario` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_simulate(
    scenario: *const c_char,
    seed: u64,
    out: *mut *mut SocnavEpisode,
) -> SocnavStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let name = str_arg(scenario, "scenario")?;
        let config = sim::generate_scenario(name, seed)
            .or_else(|e| fail(SocnavStatus::UnknownScenario, e))?;
        let ep = sim::run(&config).or_else(|e| fail(SocnavStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(SocnavEpisode(ep)));
        Ok(())
    })
}

/// Computes the metric suite. `params_json` may be null for defaults; a
/// non-positive `dt` selects the robot's median sampling interval.
///
/// # Safety
/// `episode` must be a live handle, `params_json` null or NUL-terminated,
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_compute(
    episode: *const SocnavEpisode,
    params_json: *const c_char,
    dt: f64,
    stepwise: bool,
    out: *mut *mut SocnavReport,
) -> SocnavStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ep = ref_arg(episode, "episode")?;
        let params: MetricParams = if params_json.is_null() {
            MetricParams::default()
        } else {
            serde_json::from_str(str_arg(params_json, "params_json")?)
                .or_else(|e| fail(SocnavStatus::ParseError, e))?
        };
        let dt = (dt > 0.0).then_some(dt);
        let report = metrics::compute_all(&ep.0, &params, dt, stepwise).or_else(|e| {
            let status = match e {
                metrics::MetricError::InvalidParams(_) => SocnavStatus::InvalidArgument,
                _ => SocnavStatus::ComputeError,
            };
            fail(status, e)
        })?;
        *out = Box::into_raw(Box::new(SocnavReport(report)));
        Ok(())
    })
}

/// Canonical JSON of the report.
///
/// # Safety
/// `report` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_report_to_json(
    report: *const SocnavReport,
    out_json: *mut *mut c_char,
) -> SocnavStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        *out_json = into_c_string(ref_arg(report, "report")?.0.to_bytes())?;
        Ok(())
    })
}

/// Numeric value of a taskwise metric; booleans read as 0 or 1.
/// Returns `Undefined` for metrics without a value and `NotFound` for
/// unknown names.
///
/// # Safety
/// `report` must be a live handle, `metric` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_report_get_real(
    report: *const SocnavReport,
    metric: *const c_char,
    out: *mut f64,
) -> SocnavStatus {
    guard(|| {
        out_arg(out, "out")?;
        let report = ref_arg(report, "report")?;
        let name = str_arg(metric, "metric")?;
        match report.0.get(name) {
            None => fail(SocnavStatus::NotFound, format!("no metric `{name}`")),
            Some(Scalar::Null) => fail(
                SocnavStatus::Undefined,
                format!("metric `{name}` is undefined"),
            ),
            Some(v) => {
                *out = v.as_f64().expect("non-null");
                Ok(())
            }
        }
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn socnav_report_free(report: *mut SocnavReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Scenario labels from the built-in cards, as a JSON array.
///
/// # Safety
/// `episode` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_classify(
    episode: *const SocnavEpisode,
    out_json: *mut *mut c_char,
) -> SocnavStatus {
    guard(|| {
        out_arg(out_json, "out_json")?;
        *out_json = ptr::null_mut();
        let ep = ref_arg(episode, "episode")?;
        let labels = scenarios::classify(&ep.0, &CardRegistry::builtin(), None)
            .or_else(|e| fail(SocnavStatus::ComputeError, e))?;
        let value = serde_json::to_value(&labels).expect("labels serialize");
        *out_json = into_c_string(socnav::json::to_canonical_bytes(&value))?;
        Ok(())
    })
}

/// Validates an episode document. Stores the number of errors in
/// `out_errors` and, when `out_issues_json` is not null, all issues as a
/// JSON array.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out_errors` must be writable;
/// `out_issues_json` null or writable.
#[no_mangle]
pub unsafe extern "C" fn socnav_validate(
    data: *const u8,
    len: usize,
    out_errors: *mut usize,
    out_issues_json: *mut *mut c_char,
) -> SocnavStatus {
    guard(|| {
        out_arg(out_errors, "out_errors")?;
        if !out_issues_json.is_null() {
            *out_issues_json = ptr::null_mut();
        }
        let issues = ingest::validate(bytes_arg(data, len)?);
        *out_errors = issues.iter().filter(|i| i.is_error()).count();
        if !out_issues_json.is_null() {
            let value = serde_json::to_value(&issues).expect("issues serialize");
            *out_issues_json = into_c_string(socnav::json::to_canonical_bytes(&value))?;
        }
        Ok(())
    })
}
