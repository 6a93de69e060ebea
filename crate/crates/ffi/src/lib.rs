//! C ABI over `pointerlab`.
//!
//! Every fallible call returns a [`PlStatus`]; on failure the message is
//! available from [`pl_last_error_message`] on the same thread. Scenarios are
//! opaque handles released with [`pl_scenario_free`]. Output arrays are
//! caller-allocated, with their length passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use pointerlab::spin::spin_quasi_probabilities;
use pointerlab::{
    BlochDirection, Error, QuantumScenario, Scenario, SpinConfiguration, WeightedShiftSet,
};

/// Status codes. `PL_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    PlOk = 0,
    PlNullPointer = 1,
    PlInvalidUtf8 = 2,
    PlParseError = 3,
    PlValidationError = 4,
    PlBufferTooSmall = 5,
    /// The scenario has no quantum system (classical or collapse-only file).
    PlWrongKind = 6,
    PlIllConditioned = 7,
    PlDegenerate = 8,
    PlDomainError = 9,
    PlPanic = 10,
}

/// Opaque scenario handle.
pub struct PlScenario {
    inner: Scenario,
    spin: Option<QuantumScenario>,
}

impl PlScenario {
    fn quantum(&self) -> Option<&QuantumScenario> {
        self.inner.quantum().or(self.spin.as_ref())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> PlStatus {
    set_error(err.to_string());
    match err {
        Error::Parse(_) => PlStatus::PlParseError,
        Error::Validation { .. } | Error::InvalidArgument(_) => PlStatus::PlValidationError,
        Error::IllConditionedPostselection { .. } | Error::UnreachableFinalState { .. } => {
            PlStatus::PlIllConditioned
        }
        Error::DegenerateWeightSum { .. } => PlStatus::PlDegenerate,
        _ => PlStatus::PlDomainError,
    }
}

fn guard(f: impl FnOnce() -> PlStatus) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == PlStatus::PlOk {
                set_error("");
            }
            s
        }
        Err(_) => {
            set_error("internal panic");
            PlStatus::PlPanic
        }
    }
}

fn null(what: &str) -> PlStatus {
    set_error(format!("{what} is null"));
    PlStatus::PlNullPointer
}

unsafe fn write_out(values: &[f64], out: *mut f64, len: usize) -> PlStatus {
    if out.is_null() {
        return null("out");
    }
    if len < values.len() {
        set_error(format!(
            "buffer holds {len} values, {} needed",
            values.len()
        ));
        return PlStatus::PlBufferTooSmall;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    PlStatus::PlOk
}

unsafe fn with_quantum(
    sc: *const PlScenario,
    f: impl FnOnce(&QuantumScenario) -> PlStatus,
) -> PlStatus {
    let Some(sc) = sc.as_ref() else {
        return null("scenario");
    };
    match sc.quantum() {
        Some(q) => f(q),
        None => {
            set_error("scenario has no quantum system");
            PlStatus::PlWrongKind
        }
    }
}

/// Parse and validate a TOML scenario. On success `*out` owns a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_load_toml(
    text: *const c_char,
    out: *mut *mut PlScenario,
) -> PlStatus {
    guard(|| {
        if text.is_null() {
            return null("text");
        }
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(text).to_str() else {
            set_error("scenario text is not UTF-8");
            return PlStatus::PlInvalidUtf8;
        };
        match Scenario::from_toml_str(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PlScenario { inner, spin: None }));
                PlStatus::PlOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Spin-1/2 scenario `z↑ → n(φ, θ) → n'(φ', θ')` with `B = F = (1, -1)`.
/// Angles in radians.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_from_spin(
    phi: f64,
    theta: f64,
    phi_final: f64,
    theta_final: f64,
    out: *mut *mut PlScenario,
) -> PlStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        if ![phi, theta, phi_final, theta_final]
            .iter()
            .all(|a| a.is_finite())
        {
            set_error("angles must be finite");
            return PlStatus::PlValidationError;
        }
        let cfg = SpinConfiguration::new(
            BlochDirection::new(phi, theta),
            BlochDirection::new(phi_final, theta_final),
        );
        let inner = match Scenario::from_toml_str("") {
            Ok(s) => s,
            Err(e) => return status_of(&e),
        };
        *out = Box::into_raw(Box::new(PlScenario {
            inner,
            spin: Some(cfg.to_scenario()),
        }));
        PlStatus::PlOk
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `sc` must come from a `pl_scenario_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_free(sc: *mut PlScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// Hilbert-space (or network) dimension N.
///
/// # Safety
/// `sc` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_scenario_dim(sc: *const PlScenario, out: *mut usize) -> PlStatus {
    guard(|| {
        let Some(h) = sc.as_ref() else {
            return null("scenario");
        };
        if out.is_null() {
            return null("out");
        }
        let dim = h
            .quantum()
            .map(|q| q.dim())
            .or_else(|| h.inner.classical_network().map(|n| n.dim()));
        match dim {
            Some(d) => {
                *out = d;
                PlStatus::PlOk
            }
            None => {
                set_error("scenario has no system");
                PlStatus::PlWrongKind
            }
        }
    })
}

/// Quasi-probability table, row-major `out[j * N + i]`; `len >= N * N`.
///
/// # Safety
/// `sc` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_quasi_probabilities(
    sc: *const PlScenario,
    out: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| {
        with_quantum(sc, |q| {
            write_out(q.quasi_probabilities().as_slice(), out, len)
        })
    })
}

/// `|⟨f_j|U2 U1|I⟩|²` for every j; `len >= N`.
///
/// # Safety
/// `sc` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_arrival_probabilities(
    sc: *const PlScenario,
    out: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| with_quantum(sc, |q| write_out(&q.arrival_probabilities(), out, len)))
}

/// `|⟨b_i|U1|I⟩|²` for every i; `len >= N`.
///
/// # Safety
/// `sc` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_node_probabilities(
    sc: *const PlScenario,
    out: *mut f64,
    len: usize,
) -> PlStatus {
    guard(|| with_quantum(sc, |q| write_out(&q.node_probabilities(), out, len)))
}

/// Weak value of `B̂` post-selected on final state `j`.
///
/// # Safety
/// `sc` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_weak_value(
    sc: *const PlScenario,
    j: usize,
    re: *mut f64,
    im: *mut f64,
) -> PlStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return null("re/im");
        }
        with_quantum(sc, |q| {
            if j >= q.dim() {
                set_error(format!("final state {j} out of range for N = {}", q.dim()));
                return PlStatus::PlValidationError;
            }
            match q.weak_value(j) {
                Ok(w) => {
                    *re = w.re;
                    *im = w.im;
                    PlStatus::PlOk
                }
                Err(e) => status_of(&e),
            }
        })
    })
}

/// Closed-form spin quasi-probabilities `P̃1..P̃4` into `out[4]`.
///
/// # Safety
/// `out` must hold 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_spin_quasi_probabilities(
    phi: f64,
    theta: f64,
    phi_final: f64,
    theta_final: f64,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        let cfg = SpinConfiguration::new(
            BlochDirection::new(phi, theta),
            BlochDirection::new(phi_final, theta_final),
        );
        write_out(&spin_quasi_probabilities(&cfg), out, 4)
    })
}

/// Collapse centre `Re[Σ A_k B_k / Σ A_k]` of `n` weights and shifts.
/// `weights_im` may be null for real weights.
///
/// # Safety
/// `weights_re` and `shifts` (and `weights_im` if non-null) must hold `n`
/// doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_collapse_center(
    weights_re: *const f64,
    weights_im: *const f64,
    shifts: *const f64,
    n: usize,
    out: *mut f64,
) -> PlStatus {
    guard(|| {
        if weights_re.is_null() || shifts.is_null() || out.is_null() {
            return null("weights/shifts/out");
        }
        let re = std::slice::from_raw_parts(weights_re, n);
        let im = if weights_im.is_null() {
            None
        } else {
            Some(std::slice::from_raw_parts(weights_im, n))
        };
        let weights: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(re[k], im.map_or(0.0, |v| v[k])))
            .collect();
        let shifts = std::slice::from_raw_parts(shifts, n).to_vec();
        let z =
            WeightedShiftSet::new(weights, shifts, 1.0).and_then(|s| s.collapse_center_complex());
        match z {
            Ok(z) => {
                *out = z;
                PlStatus::PlOk
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Message of the last failed call on this thread (empty after success).
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
