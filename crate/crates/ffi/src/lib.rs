//! C ABI over `noma_harq`.
//!
//! Configurations and quadrature rules are opaque heap handles created by
//! `nh_*_new` and released with the matching `nh_*_free`. Every fallible call
//! returns an [`NhStatus`] and writes its result through an out pointer; on
//! failure a description is available from [`nh_last_error`] on the same
//! thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noma_harq::analytic::{self, QuadratureSpec, Theorem1Options};
use noma_harq::montecarlo::{self, OutageEstimate, SimPlan};
use noma_harq::{tradeoff, Error, SystemConfig, SystemParams, User};

/// Result code of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the operation's domain.
    Domain = 2,
    /// Parameters violate a system invariant.
    Validation = 3,
    /// Work budget exceeded.
    Resource = 4,
    Io = 5,
    Json = 6,
    /// Non-UTF-8 string argument.
    Encoding = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// Which outage event a simulation estimates.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NhEvent {
    NomaUser1 = 0,
    NomaUser2 = 1,
    OmaUser1 = 2,
    OmaUser2 = 3,
}

/// Plain parameter block for [`nh_config_new`]. `rho` is linear.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NhParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub rho: f64,
    pub d1: f64,
    pub d2: f64,
    pub zeta: f64,
    pub rate1: f64,
    pub rate2: f64,
}

/// Monte Carlo estimate with its standard error and 95% Wilson interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NhEstimate {
    pub p_hat: f64,
    pub trials: u64,
    pub std_err: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
}

/// Opaque validated system configuration.
pub struct NhConfig(SystemConfig);

/// Opaque quadrature rule (Chebyshev nodes and Stehfest weights).
pub struct NhQuadrature(QuadratureSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> NhStatus {
    match err {
        Error::Domain(_) => NhStatus::Domain,
        Error::Validation(_) => NhStatus::Validation,
        Error::Resource(_) => NhStatus::Resource,
        Error::Io { .. } => NhStatus::Io,
        Error::Json(_) => NhStatus::Json,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard<F>(f: F) -> NhStatus
where
    F: FnOnce() -> Result<(), (NhStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NhStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            NhStatus::Internal
        }
    }
}

fn lib_err(err: Error) -> (NhStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (NhStatus, String) {
    (NhStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or valid for reads.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (NhStatus, String)> {
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes.
unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), (NhStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    unsafe { p.write(value) };
    Ok(())
}

fn user_of(user: u32) -> Result<User, (NhStatus, String)> {
    match user {
        1 => Ok(User::One),
        2 => Ok(User::Two),
        _ => Err((NhStatus::Domain, format!("user must be 1 or 2, got {user}"))),
    }
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates `params` and stores a new handle in `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_config_new(params: NhParams, out: *mut *mut NhConfig) -> NhStatus {
    guard(|| {
        let p = SystemParams {
            alpha1: params.alpha1,
            alpha2: params.alpha2,
            rho: params.rho,
            d1: params.d1,
            d2: params.d2,
            zeta: params.zeta,
            rate1: params.rate1,
            rate2: params.rate2,
        };
        let cfg = SystemConfig::new(p).map_err(lib_err)?;
        unsafe { write(out, Box::into_raw(Box::new(NhConfig(cfg))), "out") }
    })
}

/// Parses a JSON configuration document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_config_from_json(json: *const c_char, out: *mut *mut NhConfig) -> NhStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|e| (NhStatus::Encoding, e.to_string()))?;
        let cfg = SystemConfig::from_json(text).map_err(lib_err)?;
        unsafe { write(out, Box::into_raw(Box::new(NhConfig(cfg))), "out") }
    })
}

/// Copy of `cfg` at another linear SNR.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_config_with_rho(cfg: *const NhConfig, rho: f64, out: *mut *mut NhConfig) -> NhStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let next = cfg.0.with_rho(rho).map_err(lib_err)?;
        unsafe { write(out, Box::into_raw(Box::new(NhConfig(next))), "out") }
    })
}

/// Writes the validated parameters and the derived mean channel gains.
///
/// # Safety
/// `cfg` must be a live handle; the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_config_params(
    cfg: *const NhConfig,
    out: *mut NhParams,
    lambda1: *mut f64,
    lambda2: *mut f64,
) -> NhStatus {
    guard(|| {
        let cfg = &unsafe { deref(cfg, "cfg") }?.0;
        let p = cfg.params();
        let params = NhParams {
            alpha1: p.alpha1,
            alpha2: p.alpha2,
            rho: p.rho,
            d1: p.d1,
            d2: p.d2,
            zeta: p.zeta,
            rate1: p.rate1,
            rate2: p.rate2,
        };
        unsafe {
            write(out, params, "out")?;
            write(lambda1, cfg.lambda1(), "lambda1")?;
            write(lambda2, cfg.lambda2(), "lambda2")
        }
    })
}

/// Releases a configuration handle. Null is a no-op.
///
/// # Safety
/// `cfg` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_config_free(cfg: *mut NhConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Quadrature rule with `n_nodes` Chebyshev nodes and `l_terms` Stehfest
/// terms (even, at most 18).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_quadrature_new(n_nodes: usize, l_terms: usize, out: *mut *mut NhQuadrature) -> NhStatus {
    guard(|| {
        let q = QuadratureSpec::new(n_nodes, l_terms).map_err(lib_err)?;
        unsafe { write(out, Box::into_raw(Box::new(NhQuadrature(q))), "out") }
    })
}

/// # Safety
/// `quad` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nh_quadrature_free(quad: *mut NhQuadrature) {
    if !quad.is_null() {
        drop(unsafe { Box::from_raw(quad) });
    }
}

/// Single-round SINR CDF of `user` (1 or 2) at `y`.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_cdf_sinr_single(cfg: *const NhConfig, user: u32, y: f64, out: *mut f64) -> NhStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let p = analytic::cdf_sinr_single(y, &cfg.0, user_of(user)?).map_err(lib_err)?;
        unsafe { write(out, p, "out") }
    })
}

/// User 1's outage after `t_rounds` combined rounds from the transform
/// series. `quad` may be null for the default 20-node, 10-term rule.
/// Nonzero `literal` evaluates the uncorrected variant with the extra `1/r`.
///
/// # Safety
/// `cfg` must be a live handle, `quad` null or live, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_outage_user1(
    cfg: *const NhConfig,
    quad: *const NhQuadrature,
    t_rounds: u32,
    literal: bool,
    out: *mut f64,
) -> NhStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let default = QuadratureSpec::default();
        let q = unsafe { quad.as_ref() }.map_or(&default, |q| &q.0);
        let opts = Theorem1Options {
            literal,
            ..Default::default()
        };
        let p = analytic::outage_user1_analytic(&cfg.0, t_rounds, q, opts).map_err(lib_err)?;
        unsafe { write(out, p, "out") }
    })
}

/// User 2's high-SNR outage approximation and its validity flag.
///
/// # Safety
/// `cfg` must be a live handle; the out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_outage_user2_highsnr(
    cfg: *const NhConfig,
    t_rounds: u32,
    out: *mut f64,
    valid: *mut bool,
) -> NhStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let hs = analytic::outage_user2_highsnr(&cfg.0, t_rounds).map_err(lib_err)?;
        unsafe {
            write(out, hs.probability, "out")?;
            write(valid, hs.valid, "valid")
        }
    })
}

/// OMA outage of `user` after `t_rounds` combined rounds.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_outage_oma(cfg: *const NhConfig, user: u32, t_rounds: u32, out: *mut f64) -> NhStatus {
    guard(|| {
        let cfg = unsafe { deref(cfg, "cfg") }?;
        let p = analytic::outage_oma(&cfg.0, user_of(user)?, t_rounds).map_err(lib_err)?;
        unsafe { write(out, p, "out") }
    })
}

/// Monte Carlo estimate of `event` over `trials` independent packets.
/// Deterministic in `seed` regardless of thread count.
///
/// # Safety
/// `cfg` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nh_simulate_outage(
    cfg: *const NhConfig,
    event: NhEvent,
    t_rounds: u32,
    trials: u64,
    seed: u64,
    out: *mut NhEstimate,
) -> NhStatus {
    guard(|| {
        let cfg = &unsafe { deref(cfg, "cfg") }?.0;
        let plan = SimPlan::new(trials, t_rounds, seed).map_err(lib_err)?;
        let est: OutageEstimate = match event {
            NhEvent::NomaUser1 => montecarlo::simulate_outage_user1(cfg, &plan),
            NhEvent::NomaUser2 => montecarlo::simulate_outage_user2(cfg, &plan),
            NhEvent::OmaUser1 => montecarlo::simulate_oma(cfg, User::One, &plan),
            NhEvent::OmaUser2 => montecarlo::simulate_oma(cfg, User::Two, &plan),
        };
        let (lo, hi) = est.ci95;
        let value = NhEstimate {
            p_hat: est.p_hat,
            trials: est.trials,
            std_err: est.std_err,
            ci95_lo: lo,
            ci95_hi: hi,
        };
        unsafe { write(out, value, "out") }
    })
}

/// Largest user-2 power share for which NOMA beats OMA after `t_rounds`.
#[no_mangle]
pub extern "C" fn nh_alpha2_threshold(t_rounds: u32, rate2: f64) -> f64 {
    tradeoff::alpha2_threshold(t_rounds, rate2)
}

/// `K(T) = (2^(T R2) - 1)/alpha2 - 2^(2 T R2) + 1`; negative means NOMA
/// wins for user 2 at high SNR.
#[no_mangle]
pub extern "C" fn nh_k_function(t_rounds: u32, alpha2: f64, rate2: f64) -> f64 {
    tradeoff::k_function(t_rounds, alpha2, rate2)
}

/// Smallest round count with `K < 0`; with `allow_tie`, `K <= 0`. Returns 0
/// when `alpha2` or `rate2` is out of range.
#[no_mangle]
pub extern "C" fn nh_min_rounds(alpha2: f64, rate2: f64, allow_tie: bool) -> u32 {
    if allow_tie {
        tradeoff::min_rounds_allowing_tie(alpha2, rate2)
    } else {
        tradeoff::min_rounds(alpha2, rate2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_internal_status() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, NhStatus::Internal);
        let msg = unsafe { CStr::from_ptr(nh_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn error_kinds_map_to_codes() {
        assert_eq!(status_of(&Error::Domain("x".into())), NhStatus::Domain);
        assert_eq!(status_of(&Error::Resource("x".into())), NhStatus::Resource);
        let json = serde_json_error();
        assert_eq!(status_of(&json), NhStatus::Json);
    }

    fn serde_json_error() -> Error {
        SystemConfig::from_json("[").unwrap_err()
    }

    #[test]
    fn messages_with_nul_survive() {
        set_last_error("a\0b");
        let msg = unsafe { CStr::from_ptr(nh_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }
}
