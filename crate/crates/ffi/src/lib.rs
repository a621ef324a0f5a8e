//! C ABI over the sdnmc checker.
//!
//! Handles are opaque pointers created by `sdnmc_*_parse`/`load`/`check`
//! and released with the matching `_free`. Fallible calls return an
//! [`SdnmcStatus`]; the message for the last failure on the calling thread
//! is available from [`sdnmc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sdnmc::explore::{self, Verdict};
use sdnmc::scenario::{self, Checker, Scenario};

/// Result code of a fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnmcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Scenario = 4,
    Explore = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdnmcVerdict {
    Holds = 0,
    Violated = 1,
    ResourceLimit = 2,
}

/// Overrides for a run. Negative or zero fields keep the scenario's value.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SdnmcOptions {
    /// 1 on, 0 off, -1 scenario default.
    pub por: i32,
    /// 1 on, 0 off, -1 scenario default.
    pub merge_chains: i32,
    pub threads: u32,
    pub max_states: u64,
    pub time_limit_secs: u64,
}

/// A parsed and compiled scenario.
pub struct SdnmcScenario {
    path: Option<String>,
    checker: Checker,
    scenario: Scenario,
}

/// Outcome of one run.
pub struct SdnmcResult {
    verdict: SdnmcVerdict,
    visited: u64,
    transitions: u64,
    bytes_per_state: f64,
    trace_text: Option<CString>,
    trace_json: Option<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (SdnmcStatus, String)>) -> SdnmcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SdnmcStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            SdnmcStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, (SdnmcStatus, String)> {
    if p.is_null() {
        return Err((SdnmcStatus::NullArgument, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (SdnmcStatus::InvalidUtf8, e.to_string()))
}

fn compile(sc: Scenario, path: Option<String>) -> Result<Box<SdnmcScenario>, (SdnmcStatus, String)> {
    let checker = sc.build().map_err(|e| (SdnmcStatus::Scenario, e.to_string()))?;
    Ok(Box::new(SdnmcScenario { path, checker, scenario: sc }))
}

/// Default overrides: everything taken from the scenario.
#[no_mangle]
pub extern "C" fn sdnmc_options_default() -> SdnmcOptions {
    SdnmcOptions { por: -1, merge_chains: -1, threads: 0, max_states: 0, time_limit_secs: 0 }
}

/// Parses scenario text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_scenario_parse(text: *const c_char, out: *mut *mut SdnmcScenario) -> SdnmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((SdnmcStatus::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let sc = scenario::parse(c_str(text)?).map_err(|e| (SdnmcStatus::Scenario, e.to_string()))?;
        *out = Box::into_raw(compile(sc, None)?);
        Ok(())
    })
}

/// Reads and parses a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_scenario_load(path: *const c_char, out: *mut *mut SdnmcScenario) -> SdnmcStatus {
    guard(|| {
        if out.is_null() {
            return Err((SdnmcStatus::NullArgument, "null output pointer".into()));
        }
        *out = ptr::null_mut();
        let path = c_str(path)?;
        let body = std::fs::read_to_string(path).map_err(|e| (SdnmcStatus::Io, format!("{path}: {e}")))?;
        let sc = scenario::parse(&body).map_err(|e| (SdnmcStatus::Scenario, e.to_string()))?;
        *out = Box::into_raw(compile(sc, Some(path.to_string()))?);
        Ok(())
    })
}

/// # Safety
/// `sc` must come from `sdnmc_scenario_parse` or `sdnmc_scenario_load`, or be null.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_scenario_free(sc: *mut SdnmcScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Explores the scenario. `opts` may be null.
///
/// # Safety
/// `sc` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_check(
    sc: *const SdnmcScenario,
    opts: *const SdnmcOptions,
    out: *mut *mut SdnmcResult,
) -> SdnmcStatus {
    guard(|| {
        if sc.is_null() || out.is_null() {
            return Err((SdnmcStatus::NullArgument, "null scenario or output pointer".into()));
        }
        *out = ptr::null_mut();
        let sc = &*sc;
        let mut o = sc.scenario.explore_options();
        if let Some(x) = opts.as_ref() {
            if x.por >= 0 {
                o.por = x.por != 0;
            }
            if x.merge_chains >= 0 {
                o.merge_chains = x.merge_chains != 0;
            }
            if x.threads > 0 {
                o.threads = x.threads as usize;
            }
            if x.max_states > 0 {
                o.max_states = x.max_states as usize;
            }
            if x.time_limit_secs > 0 {
                o.time_limit = Some(std::time::Duration::from_secs(x.time_limit_secs));
            }
        }
        let (model, property) = (&sc.checker.model, &sc.checker.property);
        let run = explore::explore(model, property, &o).map_err(|e| (SdnmcStatus::Explore, e.to_string()))?;
        let (trace_text, trace_json) = match &run.verdict {
            Verdict::Violated(cx) => {
                let doc = cx.to_doc(model, property, sc.path.as_deref());
                let json = serde_json::to_string_pretty(&doc).map_err(|e| (SdnmcStatus::Explore, e.to_string()))?;
                (CString::new(cx.render(model, property)).ok(), CString::new(json).ok())
            }
            _ => (None, None),
        };
        let verdict = match run.verdict {
            Verdict::Holds => SdnmcVerdict::Holds,
            Verdict::Violated(_) => SdnmcVerdict::Violated,
            Verdict::ResourceLimit { .. } => SdnmcVerdict::ResourceLimit,
        };
        *out = Box::into_raw(Box::new(SdnmcResult {
            verdict,
            visited: run.stats.visited as u64,
            transitions: run.stats.transitions,
            bytes_per_state: run.stats.bytes_per_state,
            trace_text,
            trace_json,
        }));
        Ok(())
    })
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_verdict(r: *const SdnmcResult) -> SdnmcVerdict {
    (*r).verdict
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_visited(r: *const SdnmcResult) -> u64 {
    (*r).visited
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_transitions(r: *const SdnmcResult) -> u64 {
    (*r).transitions
}

/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_bytes_per_state(r: *const SdnmcResult) -> f64 {
    (*r).bytes_per_state
}

fn copy_out(s: &Option<CString>) -> *mut c_char {
    s.as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw())
}

/// Counterexample as JSON, or null when the property holds. Release with
/// `sdnmc_string_free`.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_trace_json(r: *const SdnmcResult) -> *mut c_char {
    copy_out(&(*r).trace_json)
}

/// Counterexample as `step N:` lines, or null. Release with `sdnmc_string_free`.
///
/// # Safety
/// `r` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_trace_text(r: *const SdnmcResult) -> *mut c_char {
    copy_out(&(*r).trace_text)
}

/// # Safety
/// `r` must come from `sdnmc_check`, or be null.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_result_free(r: *mut SdnmcResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `s` must come from this library, or be null.
#[no_mangle]
pub unsafe extern "C" fn sdnmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sdnmc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn sdnmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
