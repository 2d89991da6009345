//! C ABI over the `transmon-readout` library.
//!
//! Every fallible call returns a [`TrStatus`]; on failure the message is
//! available from [`tr_last_error`] on the same thread. Status values match
//! the CLI exit codes (config 2, numeric 3, I/O 4). Arrays are passed as a
//! pointer plus an explicit length; matrices are row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use transmon_readout::discriminate::fnn::{INPUT_DIM, NUM_CLASSES};
use transmon_readout::discriminate::{
    fnn_classify, truth_table_combine, CombinedLabel, FnnModel, PrimaryLabel, SecondaryLabel,
};
use transmon_readout::levels::populations;
use transmon_readout::metrics::{
    fidelity_n_state, fidelity_two_state, ideal_fidelity, snr_for_ideal_fidelity, spam_mitigate,
    AssignmentMatrix,
};
use transmon_readout::{DecayRates, ErrorCategory, Level, ReadoutError};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Numeric = 3,
    Io = 4,
    Panic = 5,
}

/// Combined three-state label; `TR_LABEL_INVALID` flags bad input codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrLabel {
    Zero = 0,
    One = 1,
    Two = 2,
    OverlapError = 3,
    Invalid = -1,
}

/// Opaque trained network.
pub struct TrFnnModel {
    inner: FnnModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn fail(err: ReadoutError) -> TrStatus {
    let status = match err.category() {
        ErrorCategory::Config => TrStatus::Config,
        ErrorCategory::Numeric => TrStatus::Numeric,
        ErrorCategory::Io => TrStatus::Io,
    };
    set_error(err.to_string());
    status
}

fn null(what: &str) -> TrStatus {
    set_error(format!("{what} is null"));
    TrStatus::NullPointer
}

fn guard(f: impl FnOnce() -> TrStatus) -> TrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == TrStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TrStatus::Panic
        }
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn tr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Level populations at `t_us` after preparing `initial` (0..=3).
///
/// # Safety
/// `out` must point to 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_populations(
    t01: f64,
    t12: f64,
    t23: f64,
    initial: u32,
    t_us: f64,
    out: *mut f64,
) -> TrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let result = DecayRates::new(t01, t12, t23)
            .and_then(|rates| Ok((rates, Level::from_index(initial as usize)?)))
            .and_then(|(rates, level)| populations(&rates, level, t_us));
        match result {
            Ok(p) => {
                std::slice::from_raw_parts_mut(out, 4).copy_from_slice(&p.p);
                TrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// `[1 + erf(sqrt(snr^2 / 8))] / 2`.
#[no_mangle]
pub extern "C" fn tr_ideal_fidelity(snr: f64) -> f64 {
    ideal_fidelity(snr)
}

/// SNR at which the ideal fidelity equals `fidelity` (in `[0.5, 1)`).
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn tr_snr_for_ideal_fidelity(fidelity: f64, out: *mut f64) -> TrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match snr_for_ideal_fidelity(fidelity) {
            Ok(s) => {
                *out = s;
                TrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Combines a primary label (0 = `|0>`, 1 = not `|0>`) with a secondary label
/// (0 = `|0>`, 1 = `|1>`, 2 = `|2~>`).
#[no_mangle]
pub extern "C" fn tr_truth_table(primary: u32, secondary: u32) -> TrLabel {
    let p = match primary {
        0 => PrimaryLabel::Zero,
        1 => PrimaryLabel::NotZero,
        _ => return TrLabel::Invalid,
    };
    let s = match secondary {
        0 => SecondaryLabel::Zero,
        1 => SecondaryLabel::One,
        2 => SecondaryLabel::TildeTwo,
        _ => return TrLabel::Invalid,
    };
    match truth_table_combine(p, s) {
        CombinedLabel::Zero => TrLabel::Zero,
        CombinedLabel::One => TrLabel::One,
        CombinedLabel::Two => TrLabel::Two,
        CombinedLabel::OverlapError => TrLabel::OverlapError,
    }
}

unsafe fn matrix(probabilities: *const f64, n: usize) -> Result<AssignmentMatrix, TrStatus> {
    if probabilities.is_null() {
        return Err(null("matrix"));
    }
    if n == 0 {
        return Err(fail(ReadoutError::InvalidArgument(
            "matrix dimension is zero".into(),
        )));
    }
    let flat = std::slice::from_raw_parts(probabilities, n * n);
    let rows = flat.chunks(n).map(<[f64]>::to_vec).collect();
    AssignmentMatrix::from_probabilities(rows).map_err(fail)
}

/// Assignment fidelity of an `n x n` matrix with entries `P(i|j)` at
/// `probabilities[i * n + j]`. Uses the two-state formula for `n = 2` and the
/// diagonal mean otherwise.
///
/// # Safety
/// `probabilities` must point to `n * n` doubles and `out` to one.
#[no_mangle]
pub unsafe extern "C" fn tr_assignment_fidelity(
    probabilities: *const f64,
    n: usize,
    out: *mut f64,
) -> TrStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let m = match matrix(probabilities, n) {
            Ok(m) => m,
            Err(status) => return status,
        };
        let f = if n == 2 {
            fidelity_two_state(&m)
        } else {
            fidelity_n_state(&m)
        };
        match f {
            Ok(v) => {
                *out = v;
                TrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// SPAM-mitigated populations: solves `M x = raw` and projects onto the
/// probability simplex.
///
/// # Safety
/// `raw` and `out` must point to `n` doubles, `probabilities` to `n * n`.
#[no_mangle]
pub unsafe extern "C" fn tr_spam_mitigate(
    raw: *const f64,
    probabilities: *const f64,
    n: usize,
    out: *mut f64,
) -> TrStatus {
    guard(|| {
        if raw.is_null() {
            return null("raw");
        }
        if out.is_null() {
            return null("out");
        }
        let m = match matrix(probabilities, n) {
            Ok(m) => m,
            Err(status) => return status,
        };
        match spam_mitigate(std::slice::from_raw_parts(raw, n), &m) {
            Ok(x) => {
                std::slice::from_raw_parts_mut(out, n).copy_from_slice(&x);
                TrStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

fn boxed(model: FnnModel, out: *mut *mut TrFnnModel) -> TrStatus {
    unsafe { *out = Box::into_raw(Box::new(TrFnnModel { inner: model })) };
    TrStatus::Ok
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable pointer. The
/// model must be released with [`tr_fnn_free`].
#[no_mangle]
pub unsafe extern "C" fn tr_fnn_from_json(
    json: *const c_char,
    out: *mut *mut TrFnnModel,
) -> TrStatus {
    guard(|| {
        if json.is_null() {
            return null("json");
        }
        if out.is_null() {
            return null("out");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(ReadoutError::Serde(e.to_string())),
        };
        match FnnModel::from_json(text) {
            Ok(m) => boxed(m, out),
            Err(e) => fail(e),
        }
    })
}

/// Loads a model file written by the CLI.
///
/// # Safety
/// As [`tr_fnn_from_json`], with `path` a nul-terminated UTF-8 path.
#[no_mangle]
pub unsafe extern "C" fn tr_fnn_load(path: *const c_char, out: *mut *mut TrFnnModel) -> TrStatus {
    guard(|| {
        if path.is_null() {
            return null("path");
        }
        if out.is_null() {
            return null("out");
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => Path::new(p),
            Err(e) => return fail(ReadoutError::Config(e.to_string())),
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                return fail(ReadoutError::Io {
                    path: path.display().to_string(),
                    source: e,
                })
            }
        };
        match FnnModel::from_json(&text) {
            Ok(m) => boxed(m, out),
            Err(e) => fail(e),
        }
    })
}

/// Classifies `{I1, Q1, I2, Q2}`. Writes the three state probabilities to
/// `probabilities` (may be null) and the most likely state to `label`.
///
/// # Safety
/// `model` must come from this library; `input` must point to 4 doubles,
/// `probabilities` (if non-null) to 3 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tr_fnn_classify(
    model: *const TrFnnModel,
    input: *const f64,
    probabilities: *mut f64,
    label: *mut TrLabel,
) -> TrStatus {
    guard(|| {
        if model.is_null() {
            return null("model");
        }
        if input.is_null() {
            return null("input");
        }
        if label.is_null() {
            return null("label");
        }
        let mut x = [0.0; INPUT_DIM];
        x.copy_from_slice(std::slice::from_raw_parts(input, INPUT_DIM));
        if x.iter().any(|v| !v.is_finite()) {
            return fail(ReadoutError::InvalidArgument("input must be finite".into()));
        }
        let (l, p) = fnn_classify(&(*model).inner, &x);
        if !probabilities.is_null() {
            std::slice::from_raw_parts_mut(probabilities, NUM_CLASSES).copy_from_slice(&p);
        }
        *label = match l {
            CombinedLabel::Zero => TrLabel::Zero,
            CombinedLabel::One => TrLabel::One,
            CombinedLabel::Two => TrLabel::Two,
            CombinedLabel::OverlapError => TrLabel::OverlapError,
        };
        TrStatus::Ok
    })
}

/// Releases a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tr_fnn_free(model: *mut TrFnnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
