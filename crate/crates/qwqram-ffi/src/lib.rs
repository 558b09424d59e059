//! C ABI for the qwqram simulator.
//!
//! Every constructor hands back an opaque handle that must be released
//! with its matching `_free` function; strings returned by `_serialize`/
//! `_label` calls are released with [`qwqram_string_free`]. Functions
//! report a [`qwqram_status`]; on failure a human-readable message is
//! available from [`qwqram_last_error_message`] until the next failing
//! call on the same thread. The generated header lands in
//! `include/qwqram.h`.

#![allow(non_camel_case_types)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::c_char;

use qwqram::error::Error;
use qwqram::io;
use qwqram::oracle::{verify_operators, CheckKind};
use qwqram::pipeline::{qram_traced_with, qram_with, TraceRecord};
use qwqram::state::{AddressSuperposition, Amplitude, Exec, MemoryTable, SparseState, TreeShape};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum qwqram_status {
    QWQRAM_OK = 0,
    /// Null pointer, non-UTF-8 text, or an index out of bounds.
    QWQRAM_ERR_ARGUMENT = 1,
    /// Malformed input content (bad lines, duplicates, zero-norm input).
    QWQRAM_ERR_PARSE = 2,
    /// Shape or range violations (widths, levels, addresses, data words).
    QWQRAM_ERR_DOMAIN = 3,
    /// Dense dimension above the configured cap.
    QWQRAM_ERR_RESOURCE = 4,
    /// A verification check exceeded its tolerance.
    QWQRAM_ERR_VERIFICATION = 5,
    /// Unexpected internal failure.
    QWQRAM_ERR_INTERNAL = 6,
}

use qwqram_status::*;

/// Opaque classical memory table.
pub struct qwqram_memory {
    inner: MemoryTable,
}

/// Opaque address-superposition builder (raw terms; canonicalized when a
/// run consumes it).
pub struct qwqram_superposition {
    n: u32,
    terms: Vec<(u64, Amplitude)>,
}

/// Opaque sparse state.
pub struct qwqram_state {
    inner: SparseState,
}

/// Opaque trace of one memory call.
pub struct qwqram_trace {
    inner: TraceRecord,
}

/// Summary filled in by [`qwqram_verify`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct qwqram_verify_report {
    pub checks: usize,
    pub max_unitary_deviation: f64,
    pub max_adjoint_deviation: f64,
    pub max_equivalence_deviation: f64,
    pub all_permutation: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: String) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> qwqram_status {
    match err {
        Error::Parse { .. }
        | Error::DuplicateAddress { .. }
        | Error::EmptySuperposition
        | Error::ZeroNorm
        | Error::NonFiniteAmplitude => QWQRAM_ERR_PARSE,
        Error::DimensionCap { .. } => QWQRAM_ERR_RESOURCE,
        Error::AtLine { source, .. } => status_of(source),
        _ => QWQRAM_ERR_DOMAIN,
    }
}

fn report(err: Error) -> qwqram_status {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn argument_error(message: &str) -> qwqram_status {
    set_error(message.to_string());
    QWQRAM_ERR_ARGUMENT
}

/// Runs a closure, converting panics into `QWQRAM_ERR_INTERNAL` instead of
/// unwinding across the ABI.
fn guarded(f: impl FnOnce() -> qwqram_status) -> qwqram_status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            QWQRAM_ERR_INTERNAL
        }
    }
}

/// # Safety
/// `text` must be a valid NUL-terminated string or null.
unsafe fn utf8_input<'a>(text: *const c_char) -> Result<&'a str, qwqram_status> {
    if text.is_null() {
        return Err(argument_error("null text pointer"));
    }
    CStr::from_ptr(text)
        .to_str()
        .map_err(|_| argument_error("text is not valid UTF-8"))
}

fn shape_of(n: u32, m: u32) -> Result<TreeShape, qwqram_status> {
    TreeShape::new(n, m).map_err(report)
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T) -> qwqram_status {
    if out.is_null() {
        return argument_error("null output pointer");
    }
    *out = Box::into_raw(Box::new(value));
    QWQRAM_OK
}

fn owned_c_string(text: String) -> *mut c_char {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn qwqram_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Frees a string returned by any `_serialize`, `_to_json`, or `_label`
/// function.
///
/// # Safety
/// `text` must have been returned by this library and not freed before.
#[no_mangle]
pub unsafe extern "C" fn qwqram_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Creates an all-zero memory table for address width `n` and data width
/// `m`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qwqram_memory_new(
    n: u32,
    m: u32,
    out: *mut *mut qwqram_memory,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, m) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        write_handle(
            out,
            qwqram_memory {
                inner: MemoryTable::new(shape),
            },
        )
    })
}

/// Stores `value` in cell `address`.
///
/// # Safety
/// `memory` must be a live handle from `qwqram_memory_new`/`_parse`.
#[no_mangle]
pub unsafe extern "C" fn qwqram_memory_set(
    memory: *mut qwqram_memory,
    address: u64,
    value: u64,
) -> qwqram_status {
    guarded(|| {
        let Some(memory) = memory.as_mut() else {
            return argument_error("null memory handle");
        };
        match memory.inner.set(address, value) {
            Ok(()) => QWQRAM_OK,
            Err(e) => report(e),
        }
    })
}

/// Parses `ADDRESS<TAB>DATA` text into a new memory table.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_memory_parse(
    n: u32,
    m: u32,
    text: *const c_char,
    out: *mut *mut qwqram_memory,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, m) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        let text = match utf8_input(text) {
            Ok(text) => text,
            Err(status) => return status,
        };
        match io::parse_memory(text, shape) {
            Ok(inner) => write_handle(out, qwqram_memory { inner }),
            Err(e) => report(e),
        }
    })
}

/// # Safety
/// `memory` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn qwqram_memory_free(memory: *mut qwqram_memory) {
    if !memory.is_null() {
        drop(Box::from_raw(memory));
    }
}

/// Creates an empty superposition builder for address width `n`; push
/// terms into it before running.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_superposition_new(
    n: u32,
    out: *mut *mut qwqram_superposition,
) -> qwqram_status {
    guarded(|| {
        if let Err(status) = shape_of(n, 1) {
            return status;
        }
        write_handle(
            out,
            qwqram_superposition {
                n,
                terms: Vec::new(),
            },
        )
    })
}

/// Appends one `(address, re + i·im)` term.
///
/// # Safety
/// `superposition` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qwqram_superposition_push(
    superposition: *mut qwqram_superposition,
    address: u64,
    re: f64,
    im: f64,
) -> qwqram_status {
    guarded(|| {
        let Some(superposition) = superposition.as_mut() else {
            return argument_error("null superposition handle");
        };
        if address >= 1u64 << superposition.n {
            return report(Error::AddressOutOfRange {
                address,
                n: superposition.n,
            });
        }
        if !re.is_finite() || !im.is_finite() {
            return report(Error::NonFiniteAmplitude);
        }
        superposition.terms.push((address, Amplitude::new(re, im)));
        QWQRAM_OK
    })
}

/// Parses `ADDRESS<TAB>RE[<TAB>IM]` text; the result is canonicalized and,
/// when `normalize` is set, rescaled to unit norm.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_superposition_parse(
    n: u32,
    text: *const c_char,
    normalize: bool,
    out: *mut *mut qwqram_superposition,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, 1) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        let text = match utf8_input(text) {
            Ok(text) => text,
            Err(status) => return status,
        };
        match io::parse_addresses(text, shape, normalize) {
            Ok(addrs) => write_handle(
                out,
                qwqram_superposition {
                    n,
                    terms: addrs.terms().to_vec(),
                },
            ),
            Err(e) => report(e),
        }
    })
}

/// # Safety
/// `superposition` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn qwqram_superposition_free(superposition: *mut qwqram_superposition) {
    if !superposition.is_null() {
        drop(Box::from_raw(superposition));
    }
}

unsafe fn run_inputs<'a>(
    memory: *const qwqram_memory,
    superposition: *const qwqram_superposition,
) -> Result<(&'a MemoryTable, AddressSuperposition), qwqram_status> {
    let Some(memory) = memory.as_ref() else {
        return Err(argument_error("null memory handle"));
    };
    let Some(superposition) = superposition.as_ref() else {
        return Err(argument_error("null superposition handle"));
    };
    let addrs = AddressSuperposition::new(superposition.terms.clone()).map_err(report)?;
    Ok((&memory.inner, addrs))
}

fn exec_mode(parallel: bool) -> Exec {
    if parallel {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

/// One full memory call; writes the final state to `out`.
///
/// # Safety
/// All handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_run(
    n: u32,
    m: u32,
    memory: *const qwqram_memory,
    superposition: *const qwqram_superposition,
    normalize: bool,
    parallel: bool,
    out: *mut *mut qwqram_state,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, m) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        let (memory, addrs) = match run_inputs(memory, superposition) {
            Ok(inputs) => inputs,
            Err(status) => return status,
        };
        match qram_with(shape, &addrs, memory, normalize, exec_mode(parallel)) {
            Ok(inner) => write_handle(out, qwqram_state { inner }),
            Err(e) => report(e),
        }
    })
}

/// As [`qwqram_run`], also returning the labeled trace.
///
/// # Safety
/// All handles must be live; `out_state` and `out_trace` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_run_traced(
    n: u32,
    m: u32,
    memory: *const qwqram_memory,
    superposition: *const qwqram_superposition,
    normalize: bool,
    parallel: bool,
    out_state: *mut *mut qwqram_state,
    out_trace: *mut *mut qwqram_trace,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, m) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        let (memory, addrs) = match run_inputs(memory, superposition) {
            Ok(inputs) => inputs,
            Err(status) => return status,
        };
        match qram_traced_with(shape, &addrs, memory, normalize, exec_mode(parallel)) {
            Ok((state, trace)) => {
                let status = write_handle(out_state, qwqram_state { inner: state });
                if status != QWQRAM_OK {
                    return status;
                }
                let status = write_handle(out_trace, qwqram_trace { inner: trace });
                if status != QWQRAM_OK {
                    // Don't leak the state handle if the trace pointer was bad.
                    qwqram_state_free(*out_state);
                    *out_state = std::ptr::null_mut();
                }
                status
            }
            Err(e) => report(e),
        }
    })
}

/// Parses a state dump produced by `qwqram_state_serialize` (or the CLI).
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_parse(
    text: *const c_char,
    out: *mut *mut qwqram_state,
) -> qwqram_status {
    guarded(|| {
        let text = match utf8_input(text) {
            Ok(text) => text,
            Err(status) => return status,
        };
        match io::parse_state(text) {
            Ok(inner) => write_handle(out, qwqram_state { inner }),
            Err(e) => report(e),
        }
    })
}

/// Number of nonzero entries, or 0 for a null handle.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_entry_count(state: *const qwqram_state) -> usize {
    state.as_ref().map_or(0, |s| s.inner.len())
}

/// Writes ∑ |amplitude|² to `out`.
///
/// # Safety
/// `state` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_norm_squared(
    state: *const qwqram_state,
    out: *mut f64,
) -> qwqram_status {
    guarded(|| {
        let Some(state) = state.as_ref() else {
            return argument_error("null state handle");
        };
        if out.is_null() {
            return argument_error("null output pointer");
        }
        *out = state.inner.norm_squared();
        QWQRAM_OK
    })
}

/// Canonical text dump; free with [`qwqram_string_free`]. Null on a null
/// handle.
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_serialize(state: *const qwqram_state) -> *mut c_char {
    match state.as_ref() {
        Some(state) => owned_c_string(io::serialize_state(&state.inner)),
        None => std::ptr::null_mut(),
    }
}

/// JSON mirror of the dump; free with [`qwqram_string_free`].
///
/// # Safety
/// `state` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_to_json(state: *const qwqram_state) -> *mut c_char {
    match state.as_ref() {
        Some(state) => owned_c_string(io::state_to_json(&state.inner)),
        None => std::ptr::null_mut(),
    }
}

/// # Safety
/// `state` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn qwqram_state_free(state: *mut qwqram_state) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Number of recorded steps (2n+2 for a full call).
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_trace_step_count(trace: *const qwqram_trace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.len())
}

/// Label of step `index` (`psi0_0` … `psix_0`); free with
/// [`qwqram_string_free`]. Null when out of range.
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_trace_label(
    trace: *const qwqram_trace,
    index: usize,
) -> *mut c_char {
    match trace.as_ref() {
        Some(trace) => trace
            .inner
            .steps()
            .nth(index)
            .map_or(std::ptr::null_mut(), |(label, _)| {
                owned_c_string(label.to_string())
            }),
        None => std::ptr::null_mut(),
    }
}

/// Copies the state recorded at step `index` into a fresh handle.
///
/// # Safety
/// `trace` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qwqram_trace_state(
    trace: *const qwqram_trace,
    index: usize,
    out: *mut *mut qwqram_state,
) -> qwqram_status {
    guarded(|| {
        let Some(trace) = trace.as_ref() else {
            return argument_error("null trace handle");
        };
        let Some((_, state)) = trace.inner.steps().nth(index) else {
            return argument_error("trace step index out of range");
        };
        write_handle(
            out,
            qwqram_state {
                inner: state.clone(),
            },
        )
    })
}

/// Full trace document; free with [`qwqram_string_free`].
///
/// # Safety
/// `trace` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn qwqram_trace_serialize(trace: *const qwqram_trace) -> *mut c_char {
    match trace.as_ref() {
        Some(trace) => owned_c_string(io::serialize_trace(&trace.inner)),
        None => std::ptr::null_mut(),
    }
}

/// # Safety
/// `trace` must be a live handle or null; it is consumed.
#[no_mangle]
pub unsafe extern "C" fn qwqram_trace_free(trace: *mut qwqram_trace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Runs the dense-oracle checks (unitarity, permutation structure,
/// adjointness, sparse/dense equivalence) for the given shape. Fills
/// `report` when non-null. Returns `QWQRAM_OK` when every check passes,
/// `QWQRAM_ERR_VERIFICATION` on a tolerance violation, and
/// `QWQRAM_ERR_RESOURCE` when the dense dimension exceeds `cap`.
///
/// # Safety
/// `report` must be null or point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn qwqram_verify(
    n: u32,
    m: u32,
    trials: usize,
    seed: u64,
    cap: usize,
    report_out: *mut qwqram_verify_report,
) -> qwqram_status {
    guarded(|| {
        let shape = match shape_of(n, m) {
            Ok(shape) => shape,
            Err(status) => return status,
        };
        let checks = match verify_operators(shape, trials, seed, cap) {
            Ok(checks) => checks,
            Err(e) => return report(e),
        };
        let mut summary = qwqram_verify_report {
            checks: checks.len(),
            max_unitary_deviation: 0.0,
            max_adjoint_deviation: 0.0,
            max_equivalence_deviation: 0.0,
            all_permutation: true,
        };
        let mut pass = true;
        for check in &checks {
            pass &= check.passed();
            match check.kind {
                CheckKind::Unitarity => {
                    summary.max_unitary_deviation =
                        summary.max_unitary_deviation.max(check.deviation)
                }
                CheckKind::Permutation => summary.all_permutation &= check.deviation == 0.0,
                CheckKind::Equivalence => {
                    summary.max_equivalence_deviation =
                        summary.max_equivalence_deviation.max(check.deviation)
                }
                CheckKind::Adjoint => {
                    summary.max_adjoint_deviation =
                        summary.max_adjoint_deviation.max(check.deviation)
                }
            }
        }
        if !report_out.is_null() {
            *report_out = summary;
        }
        if pass {
            QWQRAM_OK
        } else {
            set_error("verification tolerances exceeded".to_string());
            QWQRAM_ERR_VERIFICATION
        }
    })
}
