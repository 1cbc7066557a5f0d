//! C ABI for `sqg-core`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new` (or
//! returned through an out-parameter) and released by the matching
//! `*_free`. Every fallible function returns an [`SqgStatus`]; on failure
//! the message is kept per thread and read back with
//! [`sqg_last_error_message`]. Panics are caught at the boundary and
//! reported as [`SqgStatus::Panic`].
//!
//! Strings returned by the library are NUL-terminated UTF-8 and must be
//! released with [`sqg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sqg_core::constants::{choose_delta, choose_rho};
use sqg_core::harness::{simulate, HarnessError, RunConfig};
use sqg_core::solver::{read_checkpoint, write_checkpoint, Solver, SolverConfig};
use sqg_core::spectral::{Grid, ScalarField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    SolverFailure = 3,
    IoFailure = 4,
    ParseFailure = 5,
    /// The run finished but at least one check failed.
    ChecksFailed = 6,
    Panic = 7,
}

/// A scalar field on a periodic grid.
pub struct SqgField(ScalarField);

/// A time stepper holding its state.
pub struct SqgSolver(Solver);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: SqgStatus, message: impl Into<String>) -> SqgStatus {
    set_error(message);
    status
}

fn guard(f: impl FnOnce() -> SqgStatus) -> SqgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SqgStatus::Panic, msg)
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, SqgStatus> {
    if path.is_null() {
        return Err(fail(SqgStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(PathBuf::from)
        .map_err(|e| fail(SqgStatus::InvalidArgument, format!("path is not UTF-8: {e}")))
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length in bytes, 0 when
/// there is none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sqg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sqg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Field from `n × n` row-major values (`values[j*n + i]` at `(i h, j h)`)
/// on a torus of side `side_length`.
///
/// # Safety
/// `values` must be valid for `n*n` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_new(
    n: usize,
    side_length: f64,
    values: *const f64,
    time: f64,
    out: *mut *mut SqgField,
) -> SqgStatus {
    guard(|| {
        if values.is_null() || out.is_null() {
            return fail(SqgStatus::NullPointer, "values or out is null");
        }
        let grid = match Grid::new(n, side_length) {
            Ok(g) => g,
            Err(e) => return fail(SqgStatus::InvalidArgument, e.to_string()),
        };
        let data = std::slice::from_raw_parts(values, n * n).to_vec();
        match ScalarField::new(grid, data, time) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SqgField(f)));
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// `sin(x₁)` on the `n`-point 2π grid.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_single_mode(n: usize, out: *mut *mut SqgField) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        match Grid::periodic(n).and_then(|g| ScalarField::from_fn(g, 0.0, |x| x[0].sin())) {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SqgField(f)));
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_free(field: *mut SqgField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Grid size, 0 for a null handle.
///
/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_n(field: *const SqgField) -> usize {
    field.as_ref().map_or(0, |f| f.0.grid().n())
}

/// # Safety
/// `field` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_time(field: *const SqgField) -> f64 {
    field.as_ref().map_or(f64::NAN, |f| f.0.time())
}

/// Copy the `n*n` values into `out`; `len` must be at least `n*n`.
///
/// # Safety
/// `field` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sqg_field_values(field: *const SqgField, out: *mut f64, len: usize) -> SqgStatus {
    guard(|| {
        let Some(f) = field.as_ref() else {
            return fail(SqgStatus::NullPointer, "field is null");
        };
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        let v = f.0.values();
        if len < v.len() {
            return fail(
                SqgStatus::InvalidArgument,
                format!("buffer holds {len} values, need {}", v.len()),
            );
        }
        ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
        SqgStatus::Ok
    })
}

/// Solver for `∂ₜθ + w·∇θ + Λ^α θ = 0` from `initial` with step `dt`.
/// `t_end` is recorded in the configuration; [`sqg_solver_advance`] is not
/// limited by it.
///
/// # Safety
/// `initial` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_solver_new(
    initial: *const SqgField,
    alpha: f64,
    dt: f64,
    t_end: f64,
    out: *mut *mut SqgSolver,
) -> SqgStatus {
    guard(|| {
        let Some(f) = initial.as_ref() else {
            return fail(SqgStatus::NullPointer, "initial is null");
        };
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        match Solver::new(&f.0, SolverConfig::new(alpha, dt, t_end)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(SqgSolver(s)));
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_solver_free(solver: *mut SqgSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Advance by `span` in equal steps no longer than `dt`.
///
/// # Safety
/// `solver` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_solver_advance(solver: *mut SqgSolver, span: f64) -> SqgStatus {
    guard(|| {
        let Some(s) = solver.as_mut() else {
            return fail(SqgStatus::NullPointer, "solver is null");
        };
        if !(span >= 0.0 && span.is_finite()) {
            return fail(SqgStatus::InvalidArgument, format!("span {span}"));
        }
        if span == 0.0 {
            return SqgStatus::Ok;
        }
        match s.0.run(span, usize::MAX, |_| Ok(())) {
            Ok(()) => SqgStatus::Ok,
            Err(e) => fail(SqgStatus::SolverFailure, e.to_string()),
        }
    })
}

/// # Safety
/// `solver` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_solver_time(solver: *const SqgSolver) -> f64 {
    solver.as_ref().map_or(f64::NAN, |s| s.0.time())
}

/// Current state as a new field handle.
///
/// # Safety
/// `solver` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_solver_state(solver: *const SqgSolver, out: *mut *mut SqgField) -> SqgStatus {
    guard(|| {
        let Some(s) = solver.as_ref() else {
            return fail(SqgStatus::NullPointer, "solver is null");
        };
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        match s.0.state() {
            Ok(f) => {
                *out = Box::into_raw(Box::new(SqgField(f)));
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::SolverFailure, e.to_string()),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `field` a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqg_checkpoint_write(path: *const c_char, alpha: f64, field: *const SqgField) -> SqgStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let Some(f) = field.as_ref() else {
            return fail(SqgStatus::NullPointer, "field is null");
        };
        match write_checkpoint(&path, alpha, &f.0) {
            Ok(()) => SqgStatus::Ok,
            Err(e) => fail(SqgStatus::IoFailure, e.to_string()),
        }
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `alpha` and `out` valid for one
/// write each.
#[no_mangle]
pub unsafe extern "C" fn sqg_checkpoint_read(
    path: *const c_char,
    alpha: *mut f64,
    out: *mut *mut SqgField,
) -> SqgStatus {
    guard(|| {
        let path = match path_arg(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if alpha.is_null() || out.is_null() {
            return fail(SqgStatus::NullPointer, "alpha or out is null");
        }
        match read_checkpoint(&path) {
            Ok(cp) => {
                *alpha = cp.alpha;
                *out = Box::into_raw(Box::new(SqgField(cp.field)));
                SqgStatus::Ok
            }
            Err(e @ sqg_core::solver::CheckpointError::Io(_)) => fail(SqgStatus::IoFailure, e.to_string()),
            Err(e) => fail(SqgStatus::ParseFailure, e.to_string()),
        }
    })
}

/// Run a simulation from config text (`key = value` lines) and return the
/// JSON report through `report_json` (free with [`sqg_string_free`]).
/// Returns `SQG_STATUS_CHECKS_FAILED` with the report set when a check
/// fails.
///
/// # Safety
/// `config` must be a NUL-terminated string and `report_json` valid for
/// one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_simulate(config: *const c_char, report_json: *mut *mut c_char) -> SqgStatus {
    guard(|| {
        if config.is_null() || report_json.is_null() {
            return fail(SqgStatus::NullPointer, "config or report_json is null");
        }
        *report_json = ptr::null_mut();
        let text = match CStr::from_ptr(config).to_str() {
            Ok(t) => t,
            Err(e) => return fail(SqgStatus::InvalidArgument, format!("config is not UTF-8: {e}")),
        };
        let cfg = match RunConfig::parse(text) {
            Ok(c) => c,
            Err(e) => return fail(SqgStatus::ParseFailure, e.to_string()),
        };
        let (report, status) = match simulate(&cfg) {
            Ok(sim) => {
                let ok = sim.report.passed();
                (sim.report, if ok { SqgStatus::Ok } else { SqgStatus::ChecksFailed })
            }
            Err(HarnessError::Aborted { report, source }) => {
                set_error(source.to_string());
                (*report, SqgStatus::SolverFailure)
            }
            Err(e @ (HarnessError::Io(_) | HarnessError::Checkpoint { .. })) => {
                return fail(SqgStatus::IoFailure, e.to_string())
            }
            Err(e) => return fail(SqgStatus::InvalidArgument, e.to_string()),
        };
        match report.to_json().map(CString::new) {
            Ok(Ok(s)) => {
                *report_json = s.into_raw();
                if status == SqgStatus::ChecksFailed {
                    set_error("at least one check failed");
                }
                status
            }
            _ => fail(SqgStatus::Panic, "report serialisation failed"),
        }
    })
}

/// Largest admissible `ρ` for velocity bounds `l`, `c`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_choose_rho(l: f64, c: f64, alpha: f64, out: *mut f64) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        match choose_rho(l, c, alpha) {
            Ok(r) => {
                *out = r;
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Largest admissible `δ` for `ρ` and measured improvement `eta`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sqg_choose_delta(rho: f64, eta: f64, out: *mut f64) -> SqgStatus {
    guard(|| {
        if out.is_null() {
            return fail(SqgStatus::NullPointer, "out is null");
        }
        match choose_delta(rho, eta) {
            Ok(d) => {
                *out = d;
                SqgStatus::Ok
            }
            Err(e) => fail(SqgStatus::InvalidArgument, e.to_string()),
        }
    })
}
