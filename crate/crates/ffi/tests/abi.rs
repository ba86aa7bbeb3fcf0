use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use tlegate_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tg_last_error()) }.to_string_lossy().into_owned()
}

fn new_gate() -> *mut TgGate {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tg_gate_new(&mut g) }, TgStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn default_gate_runs_and_reports() {
    let g = new_gate();
    let mut r = TgReport::default();
    assert_eq!(unsafe { tg_gate_run(g, &mut r) }, TgStatus::Ok);
    assert!(r.gate_error > 0.0 && r.gate_error <= 1.0);
    assert!(r.absorption_error_one < 1e-3);
    assert!(((r.s1_re * r.s1_re + r.s1_im * r.s1_im) - 1.0).abs() < 1e-3);
    assert_eq!(last_error(), "");
    unsafe { tg_gate_free(g) };
}

#[test]
fn knots_round_trip_through_the_handle() {
    let g = new_gate();
    let mut n = 0usize;
    assert_eq!(unsafe { tg_gate_knot_count(g, &mut n) }, TgStatus::Ok);
    assert_eq!(n, 20);
    let knots = vec![6.0; n];
    assert_eq!(unsafe { tg_gate_set_knots(g, knots.as_ptr(), n) }, TgStatus::Ok);
    assert_eq!(unsafe { tg_gate_set_knots(g, knots.as_ptr(), 3) }, TgStatus::Config);
    assert!(last_error().contains("expected 20 knots"));
    unsafe { tg_gate_free(g) };
}

#[test]
fn null_pointers_are_rejected() {
    assert_eq!(unsafe { tg_gate_new(ptr::null_mut()) }, TgStatus::NullPointer);
    let mut r = TgReport::default();
    assert_eq!(unsafe { tg_gate_run(ptr::null(), &mut r) }, TgStatus::NullPointer);
    assert!(last_error().contains("gate"));
    unsafe { tg_gate_free(ptr::null_mut()) };
}

#[test]
fn json_config_errors_carry_the_field_path() {
    let bad = CString::new(r#"{"version": 1, "gate": {"bogus": 1}}"#).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tg_gate_new_from_json(bad.as_ptr(), &mut g) }, TgStatus::Config);
    assert!(g.is_null());
    assert!(last_error().contains("gate.bogus"), "{}", last_error());
    let good = CString::new(r#"{"version": 1}"#).unwrap();
    assert_eq!(unsafe { tg_gate_new_from_json(good.as_ptr(), &mut g) }, TgStatus::Ok);
    unsafe { tg_gate_free(g) };
}

#[test]
fn montecarlo_without_dephasing_has_zero_spread() {
    let g = new_gate();
    let mut r = TgReport::default();
    let mut s = TgMcSummary::default();
    assert_eq!(unsafe { tg_gate_run(g, &mut r) }, TgStatus::Ok);
    assert_eq!(unsafe { tg_gate_montecarlo(g, 2, 1, &mut s) }, TgStatus::Ok);
    assert_eq!(s.mean_fidelity, 1.0 - r.gate_error);
    assert_eq!(s.std_error, 0.0);
    assert_eq!(unsafe { tg_gate_montecarlo(g, 0, 1, &mut s) }, TgStatus::Config);
    unsafe { tg_gate_free(g) };
}

#[test]
fn spm_volume_matches_the_design_value() {
    let mut v = 0.0;
    assert_eq!(unsafe { tg_spm_normalized_volume(2e6, 5e8, 3.48, &mut v) }, TgStatus::Ok);
    assert_eq!(format!("{v:.2}"), "0.17");
    assert_eq!(unsafe { tg_spm_normalized_volume(2e6, 0.0, 3.48, &mut v) }, TgStatus::Config);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(tg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn generated_header_declares_the_api_and_compiles() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/tlegate.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["tg_gate_new", "tg_gate_free", "tg_gate_run", "tg_last_error", "TG_STATUS_OK", "typedef struct TgGate TgGate"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(cc) = std::process::Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let src = std::env::temp_dir().join(format!("tlegate_header_{}.c", std::process::id()));
    std::fs::write(&src, "#include <stdio.h>\n#include \"tlegate.h\"\nint main(void) { TgGate *g = 0; TgReport r; return tg_gate_run(g, &r) == TG_STATUS_NULL_POINTER ? 0 : 1; }\n").unwrap();
    let out = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .output()
        .unwrap();
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
