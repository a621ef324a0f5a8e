use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sdnmc_ffi::*;

fn scenario(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = sdnmc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn check(path: &str, opts: Option<SdnmcOptions>) -> *mut SdnmcResult {
    let mut sc = ptr::null_mut();
    assert_eq!(sdnmc_scenario_load(scenario(path).as_ptr(), &mut sc), SdnmcStatus::Ok);
    let mut r = ptr::null_mut();
    let o = opts.as_ref().map_or(ptr::null(), |o| o as *const _);
    assert_eq!(sdnmc_check(sc, o, &mut r), SdnmcStatus::Ok);
    sdnmc_scenario_free(sc);
    r
}

#[test]
fn buggy_firewall_yields_json_trace() {
    unsafe {
        let r = check("cp1_buggy_2sw.scn", None);
        assert_eq!(sdnmc_result_verdict(r), SdnmcVerdict::Violated);
        assert!(sdnmc_result_visited(r) > 0);
        let j = sdnmc_result_trace_json(r);
        assert!(!j.is_null());
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(j).to_str().unwrap()).unwrap();
        assert!(!doc["steps"].as_array().unwrap().is_empty());
        sdnmc_string_free(j);
        let t = sdnmc_result_trace_text(r);
        assert!(CStr::from_ptr(t).to_str().unwrap().contains("violation:"));
        sdnmc_string_free(t);
        sdnmc_result_free(r);
    }
}

#[test]
fn fixed_firewall_holds_without_trace() {
    unsafe {
        let mut o = sdnmc_options_default();
        o.por = 0;
        let r = check("cp1_fixed_2sw.scn", Some(o));
        assert_eq!(sdnmc_result_verdict(r), SdnmcVerdict::Holds);
        assert!(sdnmc_result_trace_json(r).is_null());
        assert!(sdnmc_result_bytes_per_state(r) > 0.0);
        sdnmc_result_free(r);
    }
}

#[test]
fn state_budget_is_reported() {
    unsafe {
        let mut o = sdnmc_options_default();
        o.por = 0;
        o.max_states = 10;
        let r = check("cp1_fixed_2sw.scn", Some(o));
        assert_eq!(sdnmc_result_verdict(r), SdnmcVerdict::ResourceLimit);
        sdnmc_result_free(r);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut sc = ptr::null_mut();
        assert_eq!(sdnmc_scenario_parse(ptr::null(), &mut sc), SdnmcStatus::NullArgument);
        assert!(sc.is_null());

        let bad = CString::new("[topology]\nswitches = A\nhosts = C\n").unwrap();
        assert_eq!(sdnmc_scenario_parse(bad.as_ptr(), &mut sc), SdnmcStatus::Scenario);
        assert!(last_error().contains("property required"));

        let missing = CString::new("/nonexistent/x.scn").unwrap();
        assert_eq!(sdnmc_scenario_load(missing.as_ptr(), &mut sc), SdnmcStatus::Io);

        let mut r = ptr::null_mut();
        assert_eq!(sdnmc_check(ptr::null(), ptr::null(), &mut r), SdnmcStatus::NullArgument);

        let ok = CString::new(std::fs::read_to_string(scenario("cp5_consistent_fixed.scn").to_str().unwrap()).unwrap()).unwrap();
        assert_eq!(sdnmc_scenario_parse(ok.as_ptr(), &mut sc), SdnmcStatus::Ok);
        assert!(sdnmc_last_error_message().is_null());
        sdnmc_scenario_free(sc);
        sdnmc_scenario_free(ptr::null_mut());
        sdnmc_result_free(ptr::null_mut());
        sdnmc_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(sdnmc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sdnmc.h")).unwrap();
    for name in [
        "typedef struct SdnmcScenario SdnmcScenario",
        "typedef struct SdnmcResult SdnmcResult",
        "SDNMC_STATUS_NULL_ARGUMENT",
        "SDNMC_VERDICT_RESOURCE_LIMIT",
        "sdnmc_scenario_parse",
        "sdnmc_scenario_load",
        "sdnmc_check",
        "sdnmc_result_trace_json",
        "sdnmc_last_error_message",
        "sdnmc_version",
    ] {
        assert!(h.contains(name), "missing {name}");
    }
}

/// Builds and runs a small C client against the header and static library.
#[test]
fn c_client_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libsdnmc_ffi.a");
    let lib = if lib.exists() { lib } else { deps.join("libsdnmc_ffi.a") };
    assert!(lib.exists(), "static library not built at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "sdnmc.h"
int main(int argc, char **argv) {
    SdnmcScenario *sc = NULL;
    if (sdnmc_scenario_load(argv[1], &sc) != SDNMC_STATUS_OK) {
        fprintf(stderr, "%s\n", sdnmc_last_error_message());
        return 10;
    }
    SdnmcOptions o = sdnmc_options_default();
    SdnmcResult *r = NULL;
    if (sdnmc_check(sc, &o, &r) != SDNMC_STATUS_OK) return 11;
    int v = (int)sdnmc_result_verdict(r);
    printf("verdict=%d visited=%llu\n", v, (unsigned long long)sdnmc_result_visited(r));
    sdnmc_result_free(r);
    sdnmc_scenario_free(sc);
    return v;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("client");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("cc available");
    assert!(status.success());
    let out = Command::new(&exe).arg(scenario("cp1_buggy_2sw.scn").to_str().unwrap()).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("verdict=1"));
}
