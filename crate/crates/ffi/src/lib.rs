//! C ABI over the `bdnoma` optimizer.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns a
//! [`BdnError`] code, and [`bdn_last_error_message`] describes the most
//! recent failure on the calling thread. Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bdnoma::cccp::{self, CccpOptions, SolveStatus};
use bdnoma::linalg::{c, CVec};
use bdnoma::montecarlo::{sample_instance, ChannelProfile};
use bdnoma::oma::solve_oma;
use bdnoma::{Error, NetworkInstance, SecrecyTargets};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdnError {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    DeadBdLink = 4,
    NotPsd = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Outcome of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdnSolveStatus {
    Converged = 0,
    MaxIterations = 1,
    Infeasible = 2,
    SolverFailure = 3,
    RecoveryFailed = 4,
}

impl From<SolveStatus> for BdnSolveStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Converged => Self::Converged,
            SolveStatus::MaxIterations => Self::MaxIterations,
            SolveStatus::Infeasible => Self::Infeasible,
            SolveStatus::SolverFailure => Self::SolverFailure,
            SolveStatus::RecoveryFailed => Self::RecoveryFailed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdnComplex {
    pub re: f64,
    pub im: f64,
}

/// Rayleigh channel profile; every entry is circularly symmetric Gaussian
/// with the given variance.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdnProfile {
    pub m: usize,
    pub var_h_c: f64,
    pub var_h_e: f64,
    pub var_h_b: f64,
    pub var_h_v: f64,
    pub var_g_c: f64,
    pub var_g_e: f64,
    pub var_g_v: f64,
    pub alpha: f64,
    /// Transmit power over noise power, dB.
    pub snr_db: f64,
    pub epsilon: f64,
}

impl From<ChannelProfile> for BdnProfile {
    fn from(p: ChannelProfile) -> Self {
        Self {
            m: p.m,
            var_h_c: p.var_h_c,
            var_h_e: p.var_h_e,
            var_h_b: p.var_h_b,
            var_h_v: p.var_h_v,
            var_g_c: p.var_g_c,
            var_g_e: p.var_g_e,
            var_g_v: p.var_g_v,
            alpha: p.alpha,
            snr_db: p.snr_db,
            epsilon: p.epsilon,
        }
    }
}

impl From<BdnProfile> for ChannelProfile {
    fn from(p: BdnProfile) -> Self {
        Self {
            m: p.m,
            var_h_c: p.var_h_c,
            var_h_e: p.var_h_e,
            var_h_b: p.var_h_b,
            var_h_v: p.var_h_v,
            var_g_c: p.var_g_c,
            var_g_e: p.var_g_e,
            var_g_v: p.var_g_v,
            alpha: p.alpha,
            snr_db: p.snr_db,
            epsilon: p.epsilon,
        }
    }
}

/// One network realization.
pub struct BdnInstance(NetworkInstance);

/// Result of a NOMA or OMA solve.
pub struct BdnReport {
    status: SolveStatus,
    r_b: f64,
    iterations: usize,
    w_c: CVec,
    w_e: CVec,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn fail(code: BdnError, msg: &str) -> BdnError {
    set_error(msg);
    code
}

fn from_core(e: Error) -> BdnError {
    let code = match e {
        Error::Dimension(_) => BdnError::Dimension,
        Error::InvalidArgument(_) => BdnError::InvalidArgument,
        Error::DeadBdLink => BdnError::DeadBdLink,
        Error::NotPsd { .. } => BdnError::NotPsd,
    };
    fail(code, &e.to_string())
}

/// Runs `f`, turning a panic into [`BdnError::Panic`].
fn guard(f: impl FnOnce() -> BdnError) -> BdnError {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => {
            if code == BdnError::Ok {
                set_error("");
            }
            code
        }
        Err(_) => fail(BdnError::Panic, "internal panic"),
    }
}

unsafe fn vector(p: *const BdnComplex, m: usize) -> Option<CVec> {
    if p.is_null() {
        return None;
    }
    let s = std::slice::from_raw_parts(p, m);
    Some(CVec::from_iterator(m, s.iter().map(|z| c(z.re, z.im))))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bdn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The library's default channel profile.
#[no_mangle]
pub extern "C" fn bdn_profile_default() -> BdnProfile {
    ChannelProfile::default().into()
}

/// Builds an instance from explicit channels. The four vectors hold `m`
/// entries each.
#[no_mangle]
pub unsafe extern "C" fn bdn_instance_new(
    m: usize,
    h_c: *const BdnComplex,
    h_e: *const BdnComplex,
    h_b: *const BdnComplex,
    h_v: *const BdnComplex,
    g_c: BdnComplex,
    g_e: BdnComplex,
    g_v: BdnComplex,
    alpha: f64,
    sigma2: f64,
    power: f64,
    out: *mut *mut BdnInstance,
) -> BdnError {
    guard(|| {
        if out.is_null() {
            return fail(BdnError::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if m == 0 {
            return fail(BdnError::Dimension, "antenna count must be at least 1");
        }
        let (Some(h_c), Some(h_e), Some(h_b), Some(h_v)) = (vector(h_c, m), vector(h_e, m), vector(h_b, m), vector(h_v, m))
        else {
            return fail(BdnError::NullPointer, "channel vector is null");
        };
        let g = |z: BdnComplex| c(z.re, z.im);
        match NetworkInstance::new(h_c, h_e, h_b, h_v, g(g_c), g(g_e), g(g_v), alpha, sigma2, power) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(BdnInstance(inst)));
                BdnError::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Draws an instance from `profile` with the given seed.
#[no_mangle]
pub unsafe extern "C" fn bdn_instance_sample(profile: *const BdnProfile, seed: u64, out: *mut *mut BdnInstance) -> BdnError {
    guard(|| {
        if profile.is_null() || out.is_null() {
            return fail(BdnError::NullPointer, "profile or out is null");
        }
        *out = ptr::null_mut();
        match sample_instance(&ChannelProfile::from(*profile), seed) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(BdnInstance(inst)));
                BdnError::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Number of BS antennas; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn bdn_instance_antennas(inst: *const BdnInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.m())
}

#[no_mangle]
pub unsafe extern "C" fn bdn_instance_free(inst: *mut BdnInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

unsafe fn solve_with(
    inst: *const BdnInstance,
    r_c: f64,
    r_e: f64,
    epsilon: f64,
    seed: u64,
    out: *mut *mut BdnReport,
    oma: bool,
) -> BdnError {
    guard(|| {
        if inst.is_null() || out.is_null() {
            return fail(BdnError::NullPointer, "instance or out is null");
        }
        *out = ptr::null_mut();
        let inst = &(*inst).0;
        let t = match SecrecyTargets::new(r_c, r_e, epsilon) {
            Ok(t) => t,
            Err(e) => return from_core(e),
        };
        let opts = CccpOptions { seed, ..Default::default() };
        let report = if oma {
            solve_oma(inst, &t, &opts).map(|r| BdnReport {
                status: r.status,
                r_b: r.r_b,
                iterations: r.slot_a.iterations + r.slot_b.iterations,
                w_c: r.w_c,
                w_e: r.w_e,
            })
        } else {
            cccp::run(inst, &t, &opts).map(|r| BdnReport {
                status: r.status,
                r_b: r.r_b,
                iterations: r.iterations,
                w_c: r.beams.w_c,
                w_e: r.beams.w_e,
            })
        };
        match report {
            Ok(r) => {
                *out = Box::into_raw(Box::new(r));
                BdnError::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Maximizes the outage secrecy rate with NOMA beams. `seed` drives the
/// randomized rank-one recovery.
#[no_mangle]
pub unsafe extern "C" fn bdn_solve_noma(
    inst: *const BdnInstance,
    r_c: f64,
    r_e: f64,
    epsilon: f64,
    seed: u64,
    out: *mut *mut BdnReport,
) -> BdnError {
    solve_with(inst, r_c, r_e, epsilon, seed, out, false)
}

/// Same problem under the two-slot OMA baseline.
#[no_mangle]
pub unsafe extern "C" fn bdn_solve_oma(
    inst: *const BdnInstance,
    r_c: f64,
    r_e: f64,
    epsilon: f64,
    seed: u64,
    out: *mut *mut BdnReport,
) -> BdnError {
    solve_with(inst, r_c, r_e, epsilon, seed, out, true)
}

#[no_mangle]
pub unsafe extern "C" fn bdn_report_status(report: *const BdnReport, out: *mut BdnSolveStatus) -> BdnError {
    match (report.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = r.status.into();
            BdnError::Ok
        }
        _ => fail(BdnError::NullPointer, "report or out is null"),
    }
}

/// Certified rate in bits/s/Hz (0 unless the status is a success).
#[no_mangle]
pub unsafe extern "C" fn bdn_report_r_b(report: *const BdnReport, out: *mut f64) -> BdnError {
    match (report.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = r.r_b;
            BdnError::Ok
        }
        _ => fail(BdnError::NullPointer, "report or out is null"),
    }
}

#[no_mangle]
pub unsafe extern "C" fn bdn_report_iterations(report: *const BdnReport, out: *mut usize) -> BdnError {
    match (report.as_ref(), out.is_null()) {
        (Some(r), false) => {
            *out = r.iterations;
            BdnError::Ok
        }
        _ => fail(BdnError::NullPointer, "report or out is null"),
    }
}

/// Copies both beams into caller buffers of `len` entries each. Fails with
/// [`BdnError::BufferTooSmall`] when `len` is below the antenna count.
#[no_mangle]
pub unsafe extern "C" fn bdn_report_beams(
    report: *const BdnReport,
    w_c: *mut BdnComplex,
    w_e: *mut BdnComplex,
    len: usize,
) -> BdnError {
    let Some(r) = report.as_ref() else {
        return fail(BdnError::NullPointer, "report is null");
    };
    if w_c.is_null() || w_e.is_null() {
        return fail(BdnError::NullPointer, "beam buffer is null");
    }
    let m = r.w_c.len();
    if len < m {
        return fail(BdnError::BufferTooSmall, &format!("need {m} entries, got {len}"));
    }
    for (src, dst) in [(&r.w_c, w_c), (&r.w_e, w_e)] {
        let dst = std::slice::from_raw_parts_mut(dst, m);
        for (d, s) in dst.iter_mut().zip(src.iter()) {
            *d = BdnComplex { re: s.re, im: s.im };
        }
    }
    BdnError::Ok
}

#[no_mangle]
pub unsafe extern "C" fn bdn_report_free(report: *mut BdnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
