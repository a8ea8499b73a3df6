//! C ABI for the hpcomplex library.
//!
//! Every object crosses the boundary as an opaque handle created and
//! destroyed here; strings returned through out-parameters are owned by the
//! caller and must be released with [`hp_string_free`]. Functions return an
//! [`HpStatus`]; on any failure the thread-local message retrieved by
//! [`hp_last_error_message`] describes what went wrong.

use hpcomplex::homotopy::signature_winding;
use hpcomplex::hp::{
    check_acyclic_iff_b_invertible, lemma_q_identities, signature_unitary, validate_complex,
    validate_duality, HPComplexData, UnitaryLoop,
};
use hpcomplex::models::suspension_model;
use hpcomplex::perm::Permutation;
use hpcomplex::report::Report;
use hpcomplex::tol::{SampleGrid, Tolerances};
use hpcomplex::winding::winding_number;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpStatus {
    /// Success.
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Input could not be parsed (JSON or cycle notation).
    Parse = 2,
    /// The operation ran but a mathematical precondition failed
    /// (odd dimension required, singular fiber, wild loop, ...).
    CheckFailed = 3,
    /// Internal panic; the handle states are unchanged.
    Internal = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|e| {
        *e.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn hp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Opaque HP complex handle.
pub struct HpModel {
    inner: HPComplexData,
}

/// Opaque sampled unitary loop handle.
pub struct HpUnitaryLoop {
    inner: UnitaryLoop,
}

fn guard<T>(f: impl FnOnce() -> Result<T, (HpStatus, String)>) -> Result<T, HpStatus> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err((status, msg))) => {
            set_error(&msg);
            Err(status)
        }
        Err(_) => {
            set_error("internal panic");
            Err(HpStatus::Internal)
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, (HpStatus, String)> {
    if ptr.is_null() {
        return Err((HpStatus::NullPointer, "null string pointer".into()));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| (HpStatus::Parse, format!("invalid utf-8: {e}")))
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .unwrap_or_default()
        .into_raw()
}

fn grid_of(samples: usize) -> SampleGrid {
    if samples == 0 {
        SampleGrid::default()
    } else {
        SampleGrid::new(samples)
    }
}

/// Parse a model (bare complex JSON or a model-gen bundle) into a handle.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` to writable space
/// for one pointer.
#[no_mangle]
pub unsafe extern "C" fn hp_model_from_json(
    json: *const c_char,
    out: *mut *mut HpModel,
) -> HpStatus {
    if out.is_null() {
        set_error("null out pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let text = read_str(json)?;
        let model: HPComplexData = match serde_json::from_str(text) {
            Ok(m) => m,
            Err(_) => {
                // accept a model-gen bundle with the complex under "model"
                let value: serde_json::Value = serde_json::from_str(text)
                    .map_err(|e| (HpStatus::Parse, format!("model JSON: {e}")))?;
                let inner = value
                    .get("model")
                    .cloned()
                    .ok_or((HpStatus::Parse, "model JSON: no complex found".to_string()))?;
                serde_json::from_value(inner)
                    .map_err(|e| (HpStatus::Parse, format!("model JSON: {e}")))?
            }
        };
        Ok(Box::into_raw(Box::new(HpModel { inner: model })))
    }) {
        Ok(ptr) => {
            *out = ptr;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Build a suspension model from a permutation in cycle notation (1-indexed,
/// e.g. "(1 2)(3)") and a vertices-per-domain count.
///
/// # Safety
/// `sigma` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_model_suspension(
    sigma: *const c_char,
    k: usize,
    out: *mut *mut HpModel,
) -> HpStatus {
    if out.is_null() {
        set_error("null out pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let s = read_str(sigma)?;
        let perm = Permutation::from_cycles_str(s, 0)
            .map_err(|e| (HpStatus::Parse, e.to_string()))?;
        let model = suspension_model(&perm, k)
            .map_err(|e| (HpStatus::CheckFailed, e.to_string()))?;
        Ok(Box::into_raw(Box::new(HpModel {
            inner: model.complex,
        })))
    }) {
        Ok(ptr) => {
            *out = ptr;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Release a model handle. Null is ignored.
///
/// # Safety
/// `model` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn hp_model_free(model: *mut HpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Serialize a model back to JSON.
///
/// # Safety
/// `model` must be a live handle; `out_json` must be writable. The returned
/// string is released with `hp_string_free`.
#[no_mangle]
pub unsafe extern "C" fn hp_model_to_json(
    model: *const HpModel,
    out_json: *mut *mut c_char,
) -> HpStatus {
    if model.is_null() || out_json.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let m = &(*model).inner;
        serde_json::to_string_pretty(m)
            .map_err(|e| (HpStatus::Internal, e.to_string()))
    }) {
        Ok(json) => {
            *out_json = to_c_string(json);
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Run the HP axiom validators (complex, duality, bounded-transform lemma,
/// acyclicity biconditional). Writes the JSON report and the overall verdict;
/// `samples = 0` selects the default grid of 256.
///
/// # Safety
/// `model` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_validate(
    model: *const HpModel,
    samples: usize,
    out_report_json: *mut *mut c_char,
    out_pass: *mut bool,
) -> HpStatus {
    if model.is_null() || out_report_json.is_null() || out_pass.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let m = &(*model).inner;
        let grid = grid_of(samples);
        let tol = Tolerances::default();
        let mut report = Report::new("validate", String::new(), 0, grid.n);
        report.push(validate_complex(m, &tol));
        report.extend(validate_duality(m, grid, &tol));
        report.push(lemma_q_identities(m, grid, &tol));
        report.push(check_acyclic_iff_b_invertible(m, grid, &tol));
        Ok((report.to_json(), report.pass))
    }) {
        Ok((json, pass)) => {
            *out_report_json = to_c_string(json);
            *out_pass = pass;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Compute the signature unitary `(B + S)(B - S)^{-1}` on the sample grid.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_signature(
    model: *const HpModel,
    samples: usize,
    out: *mut *mut HpUnitaryLoop,
) -> HpStatus {
    if model.is_null() || out.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let m = &(*model).inner;
        let sig = signature_unitary(m, grid_of(samples), &Tolerances::default())
            .map_err(|e| (HpStatus::CheckFailed, e.to_string()))?;
        Ok(Box::into_raw(Box::new(HpUnitaryLoop { inner: sig.u })))
    }) {
        Ok(ptr) => {
            *out = ptr;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Signature winding of a model, with automatic grid refinement.
///
/// # Safety
/// `model` must be a live handle; `out_winding` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_signature_winding(
    model: *const HpModel,
    samples: usize,
    out_winding: *mut i64,
) -> HpStatus {
    if model.is_null() || out_winding.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let m = &(*model).inner;
        signature_winding(m, grid_of(samples), &Tolerances::default())
            .map_err(|e| (HpStatus::CheckFailed, e.to_string()))
    }) {
        Ok(w) => {
            *out_winding = w;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Release a unitary loop handle. Null is ignored.
///
/// # Safety
/// `u` must have been produced by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn hp_unitary_free(u: *mut HpUnitaryLoop) {
    if !u.is_null() {
        drop(Box::from_raw(u));
    }
}

/// Parse a unitary loop from JSON.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_unitary_from_json(
    json: *const c_char,
    out: *mut *mut HpUnitaryLoop,
) -> HpStatus {
    if out.is_null() {
        set_error("null out pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        let text = read_str(json)?;
        let u: UnitaryLoop =
            serde_json::from_str(text).map_err(|e| (HpStatus::Parse, e.to_string()))?;
        Ok(Box::into_raw(Box::new(HpUnitaryLoop { inner: u })))
    }) {
        Ok(ptr) => {
            *out = ptr;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Serialize a unitary loop to JSON.
///
/// # Safety
/// `u` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_unitary_to_json(
    u: *const HpUnitaryLoop,
    out_json: *mut *mut c_char,
) -> HpStatus {
    if u.is_null() || out_json.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        serde_json::to_string_pretty(&(*u).inner).map_err(|e| (HpStatus::Internal, e.to_string()))
    }) {
        Ok(json) => {
            *out_json = to_c_string(json);
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Winding number of the determinant of a unitary loop.
///
/// # Safety
/// `u` must be a live handle; out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn hp_winding(
    u: *const HpUnitaryLoop,
    out_winding: *mut i64,
    out_residual: *mut f64,
) -> HpStatus {
    if u.is_null() || out_winding.is_null() || out_residual.is_null() {
        set_error("null pointer");
        return HpStatus::NullPointer;
    }
    match guard(|| {
        winding_number(&(*u).inner).map_err(|e| (HpStatus::CheckFailed, e.to_string()))
    }) {
        Ok(w) => {
            *out_winding = w.winding;
            *out_residual = w.residual;
            HpStatus::Ok
        }
        Err(status) => status,
    }
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must have come from this library and not been freed before.
#[no_mangle]
pub unsafe extern "C" fn hp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
