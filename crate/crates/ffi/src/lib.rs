//! C ABI over `cdwhitney`.
//!
//! Every fallible call returns a [`CdwStatus`]; on failure the message is kept
//! per thread and read with [`cdw_last_error`]. Handles are opaque and owned by
//! the caller, who releases them with the matching `*_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use cdwhitney::algebra::CdNumber;
use cdwhitney::extension::{extend_analytic, AnalyticConfig, Extension};
use cdwhitney::jets::{whitney_check, WhitneyJet};
use cdwhitney::mollifier::{choose_kappa, KappaSchedule};
use cdwhitney::projection::pi_j;
use cdwhitney::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    UnsupportedLevel = 4,
    Parse = 5,
    NotCovered = 6,
    ValidationFailed = 7,
    JetRejected = 8,
    Io = 9,
    Internal = 10,
    Panic = 11,
    BufferTooSmall = 12,
}

/// An element of a real Cayley-Dickson algebra.
pub struct CdwNumber(CdNumber);

/// A Whitney jet on a finite point cloud.
pub struct CdwJet(WhitneyJet);

/// A fitted extension of a jet.
pub struct CdwExtension(Arc<dyn Extension>);

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| {
        let mut v = msg.into_bytes();
        v.retain(|&b| b != 0);
        v.push(0);
        *e.borrow_mut() = v;
    });
}

fn status_of(e: &Error) -> CdwStatus {
    match e {
        Error::Usage(_) => CdwStatus::InvalidArgument,
        Error::Domain(_) => CdwStatus::Domain,
        Error::UnsupportedLevel { .. } => CdwStatus::UnsupportedLevel,
        Error::Internal(_) => CdwStatus::Internal,
        Error::Parse { .. } => CdwStatus::Parse,
        Error::CoverageGap { .. } => CdwStatus::NotCovered,
        Error::StageValidation { .. } => CdwStatus::ValidationFailed,
        Error::JetRejected(_) => CdwStatus::JetRejected,
        Error::Io(_) => CdwStatus::Io,
    }
}

/// Runs `f`, converting errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<(), (CdwStatus, String)>) -> CdwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdwStatus::Ok,
        Ok(Err((s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            CdwStatus::Panic
        }
    }
}

fn lib<T>(r: cdwhitney::Result<T>) -> Result<T, (CdwStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null() -> (CdwStatus, String) {
    (CdwStatus::NullPointer, "null pointer argument".into())
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], (CdwStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (CdwStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_to(src: &[f64], dst: *mut f64, len: usize) -> Result<(), (CdwStatus, String)> {
    if dst.is_null() {
        return Err(null());
    }
    if len < src.len() {
        return Err((
            CdwStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL.
#[no_mangle]
pub unsafe extern "C" fn cdw_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if e.is_empty() {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        }
        if !buf.is_null() && len > 0 {
            let n = (e.len() - 1).min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cdw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------- numbers

/// Creates an element of A_level from its `2^level` coefficients.
#[no_mangle]
pub unsafe extern "C" fn cdw_number_new(
    level: u32,
    coeffs: *const f64,
    len: usize,
    out: *mut *mut CdwNumber,
) -> CdwStatus {
    guard(|| {
        let c = slice(coeffs, len)?.to_vec();
        let z = lib(CdNumber::new(level, c))?;
        write_out(out, CdwNumber(z))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdw_number_free(z: *mut CdwNumber) {
    if !z.is_null() {
        drop(Box::from_raw(z));
    }
}

/// Number of real coefficients, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cdw_number_dim(z: *const CdwNumber) -> usize {
    z.as_ref().map_or(0, |z| z.0.dim())
}

#[no_mangle]
pub unsafe extern "C" fn cdw_number_coeffs(z: *const CdwNumber, buf: *mut f64, len: usize) -> CdwStatus {
    guard(|| {
        let z = z.as_ref().ok_or_else(null)?;
        copy_to(z.0.coeffs(), buf, len)
    })
}

/// Doubling product `a b`.
#[no_mangle]
pub unsafe extern "C" fn cdw_number_mul(
    a: *const CdwNumber,
    b: *const CdwNumber,
    out: *mut *mut CdwNumber,
) -> CdwStatus {
    guard(|| {
        let (a, b) = (a.as_ref().ok_or_else(null)?, b.as_ref().ok_or_else(null)?);
        let p = lib(a.0.try_mul(&b.0))?;
        write_out(out, CdwNumber(p))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdw_number_conj(a: *const CdwNumber, out: *mut *mut CdwNumber) -> CdwStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(null)?;
        write_out(out, CdwNumber(a.0.conj()))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdw_number_norm(a: *const CdwNumber, out: *mut f64) -> CdwStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = a.0.norm();
        Ok(())
    })
}

/// The `j`-th coordinate recovered through algebra operations (level >= 2).
#[no_mangle]
pub unsafe extern "C" fn cdw_pi_j(a: *const CdwNumber, j: usize, out: *mut f64) -> CdwStatus {
    guard(|| {
        let a = a.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = lib(pi_j(&a.0, j))?;
        Ok(())
    })
}

// ---------------------------------------------------------------- mollifier

/// Smallest kappa with `1 - Φ(κ δ) < eps / (4 k_h)`.
#[no_mangle]
pub unsafe extern "C" fn cdw_choose_kappa(
    eps: f64,
    delta: f64,
    k_h: f64,
    level: u32,
    arity: usize,
    out: *mut f64,
) -> CdwStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = lib(choose_kappa(eps, delta, k_h, level, arity))?;
        Ok(())
    })
}

// ---------------------------------------------------------------- jets

/// Parses a jet from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn cdw_jet_from_json(json: *const c_char, out: *mut *mut CdwJet) -> CdwStatus {
    guard(|| {
        if json.is_null() {
            return Err(null());
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (CdwStatus::Parse, format!("jet JSON is not UTF-8: {e}")))?;
        let jet = lib(WhitneyJet::from_json(text))?;
        write_out(out, CdwJet(jet))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdw_jet_free(jet: *mut CdwJet) {
    if !jet.is_null() {
        drop(Box::from_raw(jet));
    }
}

/// Coordinates per point, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cdw_jet_dim(jet: *const CdwJet) -> usize {
    jet.as_ref().map_or(0, |j| j.0.dim())
}

/// Real channels per value, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cdw_jet_channels(jet: *const CdwJet) -> usize {
    jet.as_ref().map_or(0, |j| j.0.channels())
}

/// Whitney compatibility check; `passed` is 1 or 0 and `worst_ratio` the largest remainder ratio.
#[no_mangle]
pub unsafe extern "C" fn cdw_jet_check(
    jet: *const CdwJet,
    eps: f64,
    delta: f64,
    passed: *mut i32,
    worst_ratio: *mut f64,
) -> CdwStatus {
    guard(|| {
        let jet = jet.as_ref().ok_or_else(null)?;
        let report = lib(whitney_check(&jet.0, eps, delta))?;
        *passed.as_mut().ok_or_else(null)? = report.passed as i32;
        if let Some(w) = worst_ratio.as_mut() {
            *w = report.worst_ratio;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- extension

/// Fits an extension that reproduces the jet on its points and is smooth off them.
/// `kappas` holds one smoothing parameter per stage. `shell_outer` is the outer
/// radius of the first distance shell around the points.
#[no_mangle]
pub unsafe extern "C" fn cdw_extension_new(
    jet: *const CdwJet,
    eps: f64,
    delta: f64,
    shell_outer: f64,
    kappas: *const f64,
    stages: usize,
    seed: u64,
    out: *mut *mut CdwExtension,
) -> CdwStatus {
    guard(|| {
        let jet = jet.as_ref().ok_or_else(null)?;
        if stages == 0 {
            return Err((CdwStatus::InvalidArgument, "at least one stage is required".into()));
        }
        let k = slice(kappas, stages)?.to_vec();
        let mut cfg = AnalyticConfig::new(stages, KappaSchedule::Explicit(k));
        cfg.eps = eps;
        cfg.delta = delta;
        cfg.shell_outer = shell_outer;
        cfg.seed = seed;
        let res = lib(extend_analytic(jet.0.clone(), &cfg))?;
        write_out(out, CdwExtension(res.function))
    })
}

#[no_mangle]
pub unsafe extern "C" fn cdw_extension_free(ext: *mut CdwExtension) {
    if !ext.is_null() {
        drop(Box::from_raw(ext));
    }
}

/// Evaluates the extension at `z` (length `n`) into `out` (capacity `out_len`).
#[no_mangle]
pub unsafe extern "C" fn cdw_extension_eval(
    ext: *const CdwExtension,
    z: *const f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> CdwStatus {
    guard(|| {
        let ext = ext.as_ref().ok_or_else(null)?;
        let z = slice(z, n)?;
        let v = lib(ext.0.eval(z))?;
        copy_to(&v, out, out_len)
    })
}
