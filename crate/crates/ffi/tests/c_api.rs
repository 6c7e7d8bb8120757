use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use socnav_ffi::*;

fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { socnav_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(socnav_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn simulate(name: &str, seed: u64) -> *mut SocnavEpisode {
    let name = CString::new(name).unwrap();
    let mut ep = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_simulate(name.as_ptr(), seed, &mut ep) },
        SocnavStatus::Ok
    );
    ep
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(socnav_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn parse_serialize_round_trip() {
    let ep = simulate("intersection", 3);
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_episode_serialize(ep, &mut json) },
        SocnavStatus::Ok
    );
    let text = take(json);
    let mut parsed = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_episode_parse(text.as_ptr(), text.len(), &mut parsed) },
        SocnavStatus::Ok
    );
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_episode_serialize(parsed, &mut again) },
        SocnavStatus::Ok
    );
    assert_eq!(take(again), text);
    let mut n = 0usize;
    assert_eq!(
        unsafe { socnav_episode_agent_count(parsed, &mut n) },
        SocnavStatus::Ok
    );
    assert_eq!(n, 2);
    unsafe {
        socnav_episode_free(parsed);
        socnav_episode_free(ep);
    }
}

#[test]
fn malformed_documents_report_parse_errors() {
    let doc = b"{\"format_version\":";
    let mut ep = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_episode_parse(doc.as_ptr(), doc.len(), &mut ep) },
        SocnavStatus::ParseError
    );
    assert!(ep.is_null());
    assert!(!last_error().is_empty());
    let mut errors = 0usize;
    let mut issues = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_validate(doc.as_ptr(), doc.len(), &mut errors, &mut issues) },
        SocnavStatus::Ok
    );
    assert_eq!(errors, 1);
    assert!(take(issues).contains("\"severity\":\"error\""));
    assert!(last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut ep = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_simulate(ptr::null(), 1, &mut ep) },
        SocnavStatus::NullArgument
    );
    assert_eq!(
        unsafe { socnav_episode_parse(ptr::null(), 4, &mut ep) },
        SocnavStatus::NullArgument
    );
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_compute(ptr::null(), ptr::null(), 0.0, false, &mut report) },
        SocnavStatus::NullArgument
    );
    assert!(last_error().contains("episode"));
    unsafe {
        socnav_episode_free(ptr::null_mut());
        socnav_report_free(ptr::null_mut());
        socnav_string_free(ptr::null_mut());
    }
}

#[test]
fn unknown_scenario_is_an_error() {
    let name = CString::new("moonwalk").unwrap();
    let mut ep = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_simulate(name.as_ptr(), 1, &mut ep) },
        SocnavStatus::UnknownScenario
    );
    assert!(last_error().contains("moonwalk"));
}

#[test]
fn compute_and_read_metrics() {
    let ep = simulate("frontal_approach", 2);
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_compute(ep, ptr::null(), 0.0, true, &mut report) },
        SocnavStatus::Ok
    );
    let get = |name: &str| {
        let name = CString::new(name).unwrap();
        let mut v = f64::NAN;
        let status = unsafe { socnav_report_get_real(report, name.as_ptr(), &mut v) };
        (status, v)
    };
    assert_eq!(get("S"), (SocnavStatus::Ok, 1.0));
    assert_eq!(get("C"), (SocnavStatus::Ok, 0.0));
    let (status, spl) = get("SPL");
    assert_eq!(status, SocnavStatus::Ok);
    assert!(spl > 0.0 && spl <= 1.0);
    assert_eq!(get("nope").0, SocnavStatus::NotFound);
    let mut json = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_report_to_json(report, &mut json) },
        SocnavStatus::Ok
    );
    let text = take(json);
    assert!(text.contains("\"stepwise\""));
    assert!(socnav::report::validate_report(text.as_bytes()).is_empty());
    unsafe {
        socnav_report_free(report);
        socnav_episode_free(ep);
    }
}

#[test]
fn goal_less_metrics_are_undefined() {
    let doc = br#"{"format_version":"1.0","episode_id":"g","robot_under_test":"r",
        "agents":[{"id":"r","kind":"robot","radius":0.3,"states":[
          {"t":0,"x":0,"y":0},{"t":0.1,"x":0.1,"y":0},{"t":0.2,"x":0.2,"y":0},{"t":0.3,"x":0.3,"y":0}]}]}"#;
    let mut ep = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_episode_parse(doc.as_ptr(), doc.len(), &mut ep) },
        SocnavStatus::Ok,
        "{}",
        last_error()
    );
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_compute(ep, ptr::null(), 0.0, false, &mut report) },
        SocnavStatus::Ok
    );
    let name = CString::new("SPL").unwrap();
    let mut v = 0.0;
    assert_eq!(
        unsafe { socnav_report_get_real(report, name.as_ptr(), &mut v) },
        SocnavStatus::Undefined
    );
    unsafe {
        socnav_report_free(report);
        socnav_episode_free(ep);
    }
}

#[test]
fn invalid_params_are_rejected() {
    let ep = simulate("frontal_approach", 2);
    let params = CString::new(r#"{"timeout": -1}"#).unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(
        unsafe { socnav_compute(ep, params.as_ptr(), 0.0, false, &mut report) },
        SocnavStatus::InvalidArgument
    );
    let params = CString::new(r#"{"timeout": "#).unwrap();
    assert_eq!(
        unsafe { socnav_compute(ep, params.as_ptr(), 0.0, false, &mut report) },
        SocnavStatus::ParseError
    );
    assert!(report.is_null());
    unsafe { socnav_episode_free(ep) };
}

#[test]
fn classify_returns_labels() {
    let ep = simulate("frontal_approach", 2);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { socnav_classify(ep, &mut json) }, SocnavStatus::Ok);
    let labels: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(labels[0]["scenario"], "frontal_approach");
    unsafe { socnav_episode_free(ep) };
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/socnav.h")
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    for f in [
        "socnav_version",
        "socnav_last_error",
        "socnav_string_free",
        "socnav_episode_parse",
        "socnav_episode_serialize",
        "socnav_episode_agent_count",
        "socnav_episode_free",
        "socnav_simulate",
        "socnav_compute",
        "socnav_report_to_json",
        "socnav_report_get_real",
        "socnav_report_free",
        "socnav_classify",
        "socnav_validate",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(text.contains("typedef struct SocnavEpisode SocnavEpisode;"));
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "socnav.h"

int main(void) {
    SocnavEpisode *ep = NULL;
    if (socnav_simulate("frontal_approach", 2, &ep) != SOCNAV_STATUS_OK) return 1;
    SocnavReport *report = NULL;
    if (socnav_compute(ep, NULL, 0.0, false, &report) != SOCNAV_STATUS_OK) return 2;
    double s = -1.0;
    if (socnav_report_get_real(report, "S", &s) != SOCNAV_STATUS_OK || s != 1.0) return 3;
    if (socnav_report_get_real(report, "XX", &s) != SOCNAV_STATUS_NOT_FOUND) return 4;
    if (strlen(socnav_last_error()) == 0) return 5;
    socnav_report_free(report);
    socnav_episode_free(ep);
    printf("ok %s\n", socnav_version());
    return 0;
}
"#;

/// Compiles a C client against the header and, when the static library has
/// been built next to this test binary, links and runs it.
#[test]
fn c_client_compiles_against_header() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let include = header().parent().unwrap().to_path_buf();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success(), "header does not compile as C99");

    let exe_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = exe_dir.join("libsocnav_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; link step skipped", lib.display());
        return;
    }
    let bin = dir.path().join("client");
    let status = Command::new(&cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "link failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
