//! C ABI for the gate simulator.
//!
//! Every function returns a [`TgStatus`]; on failure the message is available
//! from [`tg_last_error`] on the same thread. Gates are opaque handles created
//! by `tg_gate_new*` and released with [`tg_gate_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use tlegate::config::RunConfig;
use tlegate::dephasing::{mc_fidelity, DephasingSettings};
use tlegate::fom::Chi3Platform;
use tlegate::gate::{GateSetup, GateSpec, RunMode};
use tlegate::Error;

/// Result codes; the numeric values of CONFIG and NUMERIC match the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numeric = 3,
    InvalidUtf8 = 4,
    Panic = 5,
}

/// Opaque gate handle.
pub struct TgGate {
    setup: GateSetup,
}

/// Scalar results of one gate run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TgReport {
    pub gate_error: f64,
    /// NaN when the conditional fidelity is undefined.
    pub conditional_gate_error: f64,
    pub s1_re: f64,
    pub s1_im: f64,
    pub s2_re: f64,
    pub s2_im: f64,
    pub absorption_error_one: f64,
    pub absorption_error_two: f64,
}

/// Trajectory average under pure dephasing.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TgMcSummary {
    pub mean_fidelity: f64,
    pub std_error: f64,
    /// NaN when undefined.
    pub mean_conditional_fidelity: f64,
    pub conditional_std_error: f64,
    pub n_traj: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TgStatus {
    match e.exit_code() {
        2 => TgStatus::Config,
        _ => TgStatus::Numeric,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (TgStatus, String)>) -> TgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TgStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            TgStatus::Panic
        }
    }
}

fn lib(e: Error) -> (TgStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (TgStatus, String) {
    (TgStatus::NullPointer, format!("{what} is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn tg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn boxed(spec: &GateSpec, out: *mut *mut TgGate) -> Result<(), (TgStatus, String)> {
    let setup = GateSetup::new(spec).map_err(lib)?;
    // SAFETY: checked non-null by the callers.
    unsafe { *out = Box::into_raw(Box::new(TgGate { setup })) };
    Ok(())
}

/// Gate with the default parameters.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_new(out: *mut *mut TgGate) -> TgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        boxed(&GateSpec::reference(), out)
    })
}

/// Gate from a JSON run configuration; only its `gate` section is used.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for one handle.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_new_from_json(json: *const c_char, out: *mut *mut TgGate) -> TgStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: caller guarantees a NUL-terminated string.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| (TgStatus::InvalidUtf8, e.to_string()))?;
        let config = RunConfig::from_json(text).map_err(lib)?;
        boxed(&config.gate, out)
    })
}

/// Release a handle; null is ignored.
///
/// # Safety
/// `gate` must come from `tg_gate_new*` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_free(gate: *mut TgGate) {
    if !gate.is_null() {
        // SAFETY: caller guarantees ownership of a live handle.
        drop(unsafe { Box::from_raw(gate) });
    }
}

/// Number of detuning knots.
///
/// # Safety
/// `gate` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_knot_count(gate: *const TgGate, out: *mut usize) -> TgStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let g = unsafe { gate.as_ref() }.ok_or_else(|| null("gate"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null.
        unsafe { *out = g.setup.knots().len() };
        Ok(())
    })
}

/// Replace the detuning knots; `len` must equal the knot count.
///
/// # Safety
/// `gate` must be a live handle and `knots` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_set_knots(gate: *mut TgGate, knots: *const f64, len: usize) -> TgStatus {
    guard(|| {
        // SAFETY: caller guarantees a live, unaliased handle.
        let g = unsafe { gate.as_mut() }.ok_or_else(|| null("gate"))?;
        if knots.is_null() {
            return Err(null("knots"));
        }
        if len != g.setup.knots().len() {
            return Err((TgStatus::Config, format!("expected {} knots, got {len}", g.setup.knots().len())));
        }
        // SAFETY: caller guarantees `len` readable doubles.
        let k = unsafe { std::slice::from_raw_parts(knots, len) };
        g.setup = g.setup.with_knots(k).map_err(lib)?;
        Ok(())
    })
}

/// Run both photon sectors and fill `out`.
///
/// # Safety
/// `gate` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_run(gate: *const TgGate, out: *mut TgReport) -> TgStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let g = unsafe { gate.as_ref() }.ok_or_else(|| null("gate"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = g.setup.run(RunMode::default()).map_err(lib)?;
        let f = &r.report;
        let rep = TgReport {
            gate_error: f.gate_error,
            conditional_gate_error: f.conditional_gate_error.unwrap_or(f64::NAN),
            s1_re: f.s1.re,
            s1_im: f.s1.im,
            s2_re: f.s2.re,
            s2_im: f.s2.im,
            absorption_error_one: r.absorption_error_one(),
            absorption_error_two: r.absorption_error_two(),
        };
        // SAFETY: checked non-null.
        unsafe { *out = rep };
        Ok(())
    })
}

/// Trajectory-averaged fidelity at the gate's dephasing rate.
///
/// # Safety
/// `gate` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tg_gate_montecarlo(gate: *const TgGate, n_traj: usize, seed: u64, out: *mut TgMcSummary) -> TgStatus {
    guard(|| {
        // SAFETY: caller guarantees a live handle.
        let g = unsafe { gate.as_ref() }.ok_or_else(|| null("gate"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = mc_fidelity(&g.setup, &DephasingSettings { n_traj, seed }).map_err(lib)?;
        let rep = TgMcSummary {
            mean_fidelity: s.mean_fidelity,
            std_error: s.stderr,
            mean_conditional_fidelity: s.mean_conditional_fidelity.unwrap_or(f64::NAN),
            conditional_std_error: s.conditional_stderr.unwrap_or(f64::NAN),
            n_traj: s.n_traj,
        };
        // SAFETY: checked non-null.
        unsafe { *out = rep };
        Ok(())
    })
}

/// Normalized self-phase-modulation mode volume Q·n³/(Qλ³/V).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tg_spm_normalized_volume(q: f64, q_lambda3_over_v: f64, n: f64, out: *mut f64) -> TgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = Chi3Platform {
            name: String::new(),
            chi3: 0.0,
            n,
            lambda: 1.0,
            v_spm: None,
            q: Some(q),
            q_lambda3_over_v: Some(q_lambda3_over_v),
            source: String::new(),
        };
        let v = p.normalized_volume().map_err(lib)?;
        // SAFETY: checked non-null.
        unsafe { *out = v };
        Ok(())
    })
}
