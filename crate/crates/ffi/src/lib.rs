//! C ABI for the curlsob toolkit.
//!
//! Vector fields are exposed as opaque handles; every function returns a
//! status code and writes results through out-pointers. Handles must be
//! released with [`cs_field_free`]. On any non-zero status the thread-local
//! message retrieved by [`cs_last_error_message`] describes the failure.
//! No call unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use curlsob::closed_forms::{
    loss_yau_field, loss_yau_spinor, pauli_expectation, zero_mode_residual, ZeroModeSign,
};
use curlsob::gauge::{gauge_fix, GaugeOptions};
use curlsob::io::{read_vf3, write_vf3, AnyField};
use curlsob::ops;
use curlsob::variational::quotient;
use curlsob::{Grid, VectorField};
use num_complex::Complex64;

/// Opaque vector-field handle.
pub struct CsField {
    inner: VectorField,
}

/// Status codes returned by every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    InvalidArgument = 1,
    Io = 2,
    Solver = 3,
    Degenerate = 4,
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &curlsob::Error) -> CsStatus {
    use curlsob::Error::*;
    match err {
        InvalidGrid(_) | InvalidArgument(_) | GridMismatch => CsStatus::InvalidArgument,
        Degenerate(_) => CsStatus::Degenerate,
        ComplexResidue(_) | Solver(_) => CsStatus::Solver,
        Vf3 { .. } | Io(_) => CsStatus::Io,
    }
}

fn guard<F: FnOnce() -> Result<CsStatus, (CsStatus, String)>>(f: F) -> CsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            CsStatus::Internal
        }
    }
}

fn lib_err(e: curlsob::Error) -> (CsStatus, String) {
    (status_of(&e), e.to_string())
}

/// Copy the last error message into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must point to at least `len` writable bytes, or be null (then only
/// the length is returned).
#[no_mangle]
pub unsafe extern "C" fn cs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

unsafe fn write_out(out: *mut *mut CsField, field: VectorField) -> CsStatus {
    if out.is_null() {
        set_error("null output pointer");
        return CsStatus::InvalidArgument;
    }
    *out = Box::into_raw(Box::new(CsField { inner: field }));
    CsStatus::Ok
}

/// Release a field handle. Passing null is a no-op.
///
/// # Safety
/// `field` must be a handle produced by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cs_field_free(field: *mut CsField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Sample the closed-form optimizer candidate for direction `(wx, wy, wz)`.
///
/// # Safety
/// `out` must be a valid pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn cs_field_loss_yau(
    n: usize,
    box_half_width: f64,
    wx: f64,
    wy: f64,
    wz: f64,
    out: *mut *mut CsField,
) -> CsStatus {
    guard(|| {
        let grid = Grid::new(n, box_half_width).map_err(lib_err)?;
        Ok(unsafe { write_out(out, loss_yau_field([wx, wy, wz], grid)) })
    })
}

/// Read a vector field from a vf3 file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_field_read_vf3(
    path: *const c_char,
    out: *mut *mut CsField,
) -> CsStatus {
    guard(|| {
        if path.is_null() {
            return Err((CsStatus::InvalidArgument, "null path".into()));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|e| (CsStatus::InvalidArgument, format!("bad path encoding: {e}")))?;
        match read_vf3(Path::new(path)).map_err(lib_err)? {
            AnyField::Vector(f) => Ok(unsafe { write_out(out, f) }),
            other => Err((
                CsStatus::InvalidArgument,
                format!("expected a vector field, found {:?}", other.kind()),
            )),
        }
    })
}

/// Write a vector field to a vf3 file.
///
/// # Safety
/// `field` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cs_field_write_vf3(
    field: *const CsField,
    path: *const c_char,
) -> CsStatus {
    guard(|| {
        if field.is_null() || path.is_null() {
            return Err((CsStatus::InvalidArgument, "null argument".into()));
        }
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|e| (CsStatus::InvalidArgument, format!("bad path encoding: {e}")))?;
        let f = unsafe { &(*field).inner };
        write_vf3(Path::new(path), &AnyField::Vector(f.clone())).map_err(lib_err)?;
        Ok(CsStatus::Ok)
    })
}

/// Grid parameters of a field.
///
/// # Safety
/// All pointers must be valid; `field` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cs_field_grid(
    field: *const CsField,
    n: *mut usize,
    box_half_width: *mut f64,
) -> CsStatus {
    guard(|| {
        if field.is_null() || n.is_null() || box_half_width.is_null() {
            return Err((CsStatus::InvalidArgument, "null argument".into()));
        }
        let grid = unsafe { (*field).inner.grid() };
        unsafe {
            *n = grid.n();
            *box_half_width = grid.box_half_width();
        }
        Ok(CsStatus::Ok)
    })
}

/// `L^p` norm of a field (`p >= 1`; pass INFINITY for the sup norm).
///
/// # Safety
/// `field` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cs_field_lp_norm(
    field: *const CsField,
    p: f64,
    out: *mut f64,
) -> CsStatus {
    guard(|| {
        if field.is_null() || out.is_null() {
            return Err((CsStatus::InvalidArgument, "null argument".into()));
        }
        let v = ops::lp_norm(unsafe { &(*field).inner }, p).map_err(lib_err)?;
        unsafe { *out = v };
        Ok(CsStatus::Ok)
    })
}

/// Spectral curl of a field.
///
/// # Safety
/// `field` must be a live handle; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn cs_field_curl(
    field: *const CsField,
    out: *mut *mut CsField,
) -> CsStatus {
    guard(|| {
        if field.is_null() {
            return Err((CsStatus::InvalidArgument, "null field".into()));
        }
        let c = ops::curl(unsafe { &(*field).inner }).map_err(lib_err)?;
        Ok(unsafe { write_out(out, c) })
    })
}

/// Gauge-fix summary (scalars only; request the fixed field separately).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsGaugeReport {
    pub seminorm: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: i32,
}

/// Run the nonlinear gauge solve. `out_fixed` may be null when only the
/// report is wanted.
///
/// # Safety
/// `field` must be a live handle; `report` valid; `out_fixed` valid or null.
#[no_mangle]
pub unsafe extern "C" fn cs_gauge_fix(
    field: *const CsField,
    tol: f64,
    max_iter: usize,
    report: *mut CsGaugeReport,
    out_fixed: *mut *mut CsField,
) -> CsStatus {
    guard(|| {
        if field.is_null() || report.is_null() {
            return Err((CsStatus::InvalidArgument, "null argument".into()));
        }
        let opts = GaugeOptions { tol, max_iter };
        let fix = gauge_fix(unsafe { &(*field).inner }, &opts).map_err(lib_err)?;
        unsafe {
            *report = CsGaugeReport {
                seminorm: fix.seminorm,
                constraint_residual: fix.constraint_residual,
                iterations: fix.iterations,
                converged: fix.converged as i32,
            };
            if !out_fixed.is_null() {
                return Ok(write_out(out_fixed, fix.a_fixed));
            }
        }
        Ok(CsStatus::Ok)
    })
}

/// Sobolev-quotient report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsQuotientReport {
    pub curl_norm: f64,
    pub seminorm: f64,
    pub quotient: f64,
    pub multiplier: f64,
    pub el_residual: f64,
}

/// Evaluate the Sobolev quotient and Euler-Lagrange residual of a field.
///
/// # Safety
/// `field` must be a live handle; `report` valid.
#[no_mangle]
pub unsafe extern "C" fn cs_quotient(
    field: *const CsField,
    tol: f64,
    max_iter: usize,
    eps_reg: f64,
    report: *mut CsQuotientReport,
) -> CsStatus {
    guard(|| {
        if field.is_null() || report.is_null() {
            return Err((CsStatus::InvalidArgument, "null argument".into()));
        }
        let opts = GaugeOptions { tol, max_iter };
        let q = quotient(unsafe { &(*field).inner }, &opts, eps_reg).map_err(lib_err)?;
        unsafe {
            *report = CsQuotientReport {
                curl_norm: q.curl_norm,
                seminorm: q.seminorm,
                quotient: q.quotient,
                multiplier: q.multiplier,
                el_residual: q.el_residual,
            };
        }
        Ok(CsStatus::Ok)
    })
}

/// Zero-mode residual report for the closed-form pair.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsZeroModeReport {
    pub dirac_residual: f64,
    pub relative_residual: f64,
    pub weighted_relative_residual: f64,
    pub b_norm: f64,
    pub spinor_quotient: f64,
}

/// Build the matched closed-form pair for spinor
/// `eta = (re1 + i im1, re2 + i im2)` on an `n`/`box_half_width` grid and
/// measure the zero-mode residual.
///
/// # Safety
/// `report` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_zero_mode_residual(
    n: usize,
    box_half_width: f64,
    eta_re1: f64,
    eta_im1: f64,
    eta_re2: f64,
    eta_im2: f64,
    report: *mut CsZeroModeReport,
) -> CsStatus {
    guard(|| {
        if report.is_null() {
            return Err((CsStatus::InvalidArgument, "null report pointer".into()));
        }
        let grid = Grid::new(n, box_half_width).map_err(lib_err)?;
        let eta = [Complex64::new(eta_re1, eta_im1), Complex64::new(eta_re2, eta_im2)];
        if (eta[0].norm_sqr() + eta[1].norm_sqr()).sqrt() < 1e-14 {
            return Err((CsStatus::InvalidArgument, "eta must be nonzero".into()));
        }
        let w = pauli_expectation(eta).w;
        let a = loss_yau_field(w, grid);
        let psi = loss_yau_spinor(eta, grid);
        let zm = zero_mode_residual(&a, &psi, ZeroModeSign::Minus).map_err(lib_err)?;
        unsafe {
            *report = CsZeroModeReport {
                dirac_residual: zm.dirac_residual,
                relative_residual: zm.relative_residual,
                weighted_relative_residual: zm.weighted_relative_residual,
                b_norm: zm.b_norm,
                spinor_quotient: zm.spinor_quotient,
            };
        }
        Ok(CsStatus::Ok)
    })
}
