//! C ABI for the ruin-probability library.
//!
//! The shape follows the usual C-library conventions: an opaque model
//! handle created and destroyed by this library, plain `int` status codes
//! (0 is success), results written through out-pointers, and a per-thread
//! error message for diagnostics.  The authoritative declarations live in
//! `include/ruinprob.h`; a test keeps the two in sync.
//!
//! Every entry point catches panics, so no unwinding ever crosses the
//! boundary; a caught panic reports `RP_ERR_INTERNAL`.

use ruinprob::bvp::{solve_ruin, BvpConfig, GridSpacing, TailMode};
use ruinprob::exact::exact_curve;
use ruinprob::model::{safe_load_check, ModelCase, ModelSpec, PremiumFunction, TailRegime};
use ruinprob::montecarlo::simulate_ruin;
use ruinprob::odecore::{build_coefficients, char_roots};
use ruinprob::Error;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

pub const RP_OK: c_int = 0;
pub const RP_ERR_INVALID_ARGUMENT: c_int = 1;
pub const RP_ERR_NUMERICAL: c_int = 2;
pub const RP_ERR_UNSUPPORTED: c_int = 3;
pub const RP_ERR_INTERNAL: c_int = 4;

pub const RP_CASE_EXP_EXP: c_int = 0;
pub const RP_CASE_ERLANG2_EXP: c_int = 1;
pub const RP_CASE_EXP_ERLANG2: c_int = 2;

pub const RP_PREMIUM_CONST: c_int = 0;
pub const RP_PREMIUM_LINEAR: c_int = 1;
pub const RP_PREMIUM_POLY: c_int = 2;
pub const RP_PREMIUM_RATL: c_int = 3;

pub const RP_REGIME_NONE: c_int = 0;
pub const RP_REGIME_ONE_ROOT: c_int = 1;
pub const RP_REGIME_TWO_ROOT: c_int = 2;

/// Opaque model handle; the C side only ever holds pointers to it.
pub struct RpModel {
    spec: ModelSpec,
}

/// Simulation summary, laid out for C consumption.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct RpSimResult {
    pub psi_hat: f64,
    pub half_width_95: f64,
    pub n_paths: u64,
    pub ruined_paths: u64,
    pub horizon: f64,
    /// 1 when late ruins suggest the horizon truncated the estimate.
    pub truncated: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember_error(msg: &str) {
    // NUL bytes cannot occur in our error texts, but never panic over it.
    let owned = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(e: &Error) -> c_int {
    match e {
        Error::InvalidInput(_) | Error::Config(_) | Error::Io(_) => RP_ERR_INVALID_ARGUMENT,
        Error::Unsupported(_) => RP_ERR_UNSUPPORTED,
        _ => RP_ERR_NUMERICAL,
    }
}

fn fail(e: &Error) -> c_int {
    remember_error(&e.to_string());
    status_of(e)
}

fn invalid(msg: &str) -> c_int {
    remember_error(msg);
    RP_ERR_INVALID_ARGUMENT
}

/// Runs a body with panic containment; panics become `RP_ERR_INTERNAL`.
fn guarded<F: FnOnce() -> c_int>(body: F) -> c_int {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            remember_error("internal panic");
            RP_ERR_INTERNAL
        }
    }
}

fn case_from(code: c_int) -> Option<ModelCase> {
    match code {
        RP_CASE_EXP_EXP => Some(ModelCase::ExpExp),
        RP_CASE_ERLANG2_EXP => Some(ModelCase::Erlang2Exp),
        RP_CASE_EXP_ERLANG2 => Some(ModelCase::ExpErlang2),
        _ => None,
    }
}

fn premium_from(kind: c_int, params: &[f64]) -> Result<PremiumFunction, String> {
    match (kind, params) {
        (RP_PREMIUM_CONST, [c]) => Ok(PremiumFunction::Constant { c: *c }),
        (RP_PREMIUM_LINEAR, [c, eps]) => Ok(PremiumFunction::Linear { c: *c, eps: *eps }),
        (RP_PREMIUM_POLY, [c, eps @ ..]) if !eps.is_empty() => {
            Ok(PremiumFunction::Polynomial { c: *c, eps: eps.to_vec() })
        }
        (RP_PREMIUM_RATL, [c, a]) => Ok(PremiumFunction::BoundedRational { c: *c, a: *a }),
        (RP_PREMIUM_CONST | RP_PREMIUM_LINEAR | RP_PREMIUM_POLY | RP_PREMIUM_RATL, _) => {
            Err(format!("wrong parameter count {} for premium kind {kind}", params.len()))
        }
        _ => Err(format!("unknown premium kind {kind}")),
    }
}

/// Message for the most recent failure on the calling thread.
///
/// The pointer stays valid until the next failing call on the same thread;
/// the string is empty when no failure has been recorded.
///
/// # Safety
/// The returned pointer must not be freed or written through, and must not
/// be used after a later `rp_*` failure on the same thread.
#[no_mangle]
pub unsafe extern "C" fn rp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
///
/// # Safety
/// Always safe; the pointer is valid for the lifetime of the process.
#[no_mangle]
pub unsafe extern "C" fn rp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a model handle.
///
/// `case_code` is one of the `RP_CASE_*` constants; the premium is chosen by
/// `premium_kind` (`RP_PREMIUM_*`) with its parameters in `params`:
/// const `[c]`, linear `[c, eps]`, poly `[c, e1, ...]` (p = c + Σ eᵢ uⁱ),
/// ratl `[c, a]` (p = c + a/(1+u)).  On success writes the new handle to
/// `out` and returns `RP_OK`; the handle must be released with
/// [`rp_model_free`].
///
/// # Safety
/// `params` must point to `n_params` readable doubles (it may be null only
/// when `n_params` is 0) and `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_model_new(
    case_code: c_int,
    lambda: f64,
    mu: f64,
    premium_kind: c_int,
    params: *const f64,
    n_params: usize,
    out: *mut *mut RpModel,
) -> c_int {
    if out.is_null() {
        return invalid("out pointer is null");
    }
    if params.is_null() && n_params > 0 {
        return invalid("params pointer is null");
    }
    let params = if n_params == 0 { &[][..] } else { std::slice::from_raw_parts(params, n_params) };
    guarded(|| {
        let Some(case) = case_from(case_code) else {
            return invalid(&format!("unknown case code {case_code}"));
        };
        let premium = match premium_from(premium_kind, params) {
            Ok(p) => p,
            Err(msg) => return invalid(&msg),
        };
        match ModelSpec::new(case, lambda, mu, premium) {
            Ok(spec) => {
                out.write(Box::into_raw(Box::new(RpModel { spec })));
                RP_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a handle created by [`rp_model_new`].  Null is a no-op.
///
/// # Safety
/// `model` must be a pointer returned by `rp_model_new` that has not been
/// freed already; the handle must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rp_model_free(model: *mut RpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn model_ref<'a>(model: *const RpModel) -> Option<&'a ModelSpec> {
    model.as_ref().map(|m| &m.spec)
}

/// Ruin probability by the closed-form route, written to `*out_psi`.
///
/// Fails with `RP_ERR_UNSUPPORTED` when the model's case/premium pair has
/// no closed form (use the BVP or simulation entry points there).
///
/// # Safety
/// `model` must be a live handle from `rp_model_new`; `out_psi` must be a
/// valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_ruin_exact(
    model: *const RpModel,
    u: f64,
    out_psi: *mut f64,
) -> c_int {
    let Some(spec) = model_ref(model) else {
        return invalid("model handle is null");
    };
    if out_psi.is_null() {
        return invalid("out_psi pointer is null");
    }
    guarded(|| match exact_curve(spec, &[u]) {
        Ok(curve) => {
            out_psi.write(curve.points[0].psi);
            RP_OK
        }
        Err(e) => fail(&e),
    })
}

/// Ruin curve by the boundary-value solver on a uniform grid.
///
/// Solves on `[0, u_max]` with `n_cells` uniform cells and writes the
/// `n_cells + 1` node reserves, probabilities, and error estimates to
/// `out_u`, `out_psi`, and `out_err` (any of which may be null to skip).
/// `tol` is the target absolute error; pass 0 for the default `1e-8`.
///
/// # Safety
/// `model` must be a live handle; each non-null output must point to at
/// least `n_cells + 1` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rp_ruin_curve_bvp(
    model: *const RpModel,
    u_max: f64,
    n_cells: usize,
    tol: f64,
    out_u: *mut f64,
    out_psi: *mut f64,
    out_err: *mut f64,
) -> c_int {
    let Some(spec) = model_ref(model) else {
        return invalid("model handle is null");
    };
    if n_cells == 0 {
        return invalid("n_cells must be at least 1");
    }
    guarded(|| {
        let cfg = BvpConfig {
            u_max: Some(u_max),
            grid: GridSpacing::Uniform { n: n_cells },
            tol: if tol == 0.0 { 1e-8 } else { tol },
            tail_mode: TailMode::AsymptoticSeed,
        };
        match solve_ruin(spec, &cfg) {
            Ok(curve) => {
                for (i, p) in curve.points.iter().enumerate() {
                    if !out_u.is_null() {
                        out_u.add(i).write(p.u);
                    }
                    if !out_psi.is_null() {
                        out_psi.add(i).write(p.psi);
                    }
                    if !out_err.is_null() {
                        out_err.add(i).write(p.err);
                    }
                }
                RP_OK
            }
            Err(e) => fail(&e),
        }
    })
}

/// Monte Carlo estimate of the ruin probability from reserve `u`.
///
/// Reproducible: the same model, `u`, `horizon`, `n_paths`, and `seed`
/// produce the same result regardless of thread count.
///
/// # Safety
/// `model` must be a live handle; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rp_simulate(
    model: *const RpModel,
    u: f64,
    horizon: f64,
    n_paths: u64,
    seed: u64,
    out: *mut RpSimResult,
) -> c_int {
    let Some(spec) = model_ref(model) else {
        return invalid("model handle is null");
    };
    if out.is_null() {
        return invalid("out pointer is null");
    }
    guarded(|| match simulate_ruin(spec, u, horizon, n_paths, seed) {
        Ok(r) => {
            out.write(RpSimResult {
                psi_hat: r.psi_hat,
                half_width_95: r.half_width_95,
                n_paths: r.n_paths,
                ruined_paths: r.ruined_paths,
                horizon: r.horizon,
                truncated: c_int::from(r.truncation_flag),
            });
            RP_OK
        }
        Err(e) => fail(&e),
    })
}

/// Safe-load (net profit) verdict for the model.
///
/// Writes 1/0 to `*out_satisfied`, the margin (possibly infinite) to
/// `*out_margin`, and an `RP_REGIME_*` code to `*out_regime`; null outputs
/// are skipped.  Fails with `RP_ERR_NUMERICAL` on the degenerate boundary.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must be valid writable
/// pointers.
#[no_mangle]
pub unsafe extern "C" fn rp_safe_load(
    model: *const RpModel,
    out_satisfied: *mut c_int,
    out_margin: *mut f64,
    out_regime: *mut c_int,
) -> c_int {
    let Some(spec) = model_ref(model) else {
        return invalid("model handle is null");
    };
    guarded(|| match safe_load_check(spec) {
        Ok(report) => {
            if !out_satisfied.is_null() {
                out_satisfied.write(c_int::from(report.satisfied));
            }
            if !out_margin.is_null() {
                out_margin.write(report.margin);
            }
            if !out_regime.is_null() {
                out_regime.write(match report.regime {
                    None => RP_REGIME_NONE,
                    Some(TailRegime::OneRoot) => RP_REGIME_ONE_ROOT,
                    Some(TailRegime::TwoRoot) => RP_REGIME_TWO_ROOT,
                });
            }
            RP_OK
        }
        Err(e) => fail(&e),
    })
}

/// Characteristic roots of the model's second-order equation at reserve `u`.
///
/// Writes the smaller root to `*out_lo` and the larger to `*out_hi`.  The
/// classical exponential/exponential case has a first-order equation and
/// reports `RP_ERR_UNSUPPORTED`.
///
/// # Safety
/// `model` must be a live handle; `out_lo` and `out_hi` must be valid
/// writable pointers.
#[no_mangle]
pub unsafe extern "C" fn rp_roots(
    model: *const RpModel,
    u: f64,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> c_int {
    let Some(spec) = model_ref(model) else {
        return invalid("model handle is null");
    };
    if out_lo.is_null() || out_hi.is_null() {
        return invalid("root output pointers must not be null");
    }
    guarded(|| {
        let co = match build_coefficients(spec) {
            Ok(co) => co,
            Err(e) => return fail(&e),
        };
        match char_roots(&co, u) {
            Ok((lo, hi)) => {
                out_lo.write(lo);
                out_hi.write(hi);
                RP_OK
            }
            Err(e) => fail(&e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CStr;
    use std::ptr;

    unsafe fn new_model(case: c_int, lambda: f64, mu: f64, kind: c_int, params: &[f64]) -> *mut RpModel {
        let mut handle: *mut RpModel = ptr::null_mut();
        let status = rp_model_new(case, lambda, mu, kind, params.as_ptr(), params.len(), &mut handle);
        assert_eq!(status, RP_OK, "model creation failed");
        assert!(!handle.is_null());
        handle
    }

    #[test]
    fn exact_route_matches_library() {
        unsafe {
            let m = new_model(RP_CASE_EXP_EXP, 1.0, 2.0, RP_PREMIUM_CONST, &[1.0]);
            let mut psi = f64::NAN;
            assert_eq!(rp_ruin_exact(m, 0.0, &mut psi), RP_OK);
            assert!((psi - 0.5).abs() < 1e-12);
            assert_eq!(rp_ruin_exact(m, 2.0, &mut psi), RP_OK);
            assert!((psi - 0.5 * (-2.0_f64).exp()).abs() < 1e-12);
            rp_model_free(m);
        }
    }

    #[test]
    fn bvp_curve_fills_buffers() {
        unsafe {
            let m = new_model(RP_CASE_ERLANG2_EXP, 1.0, 2.0, RP_PREMIUM_LINEAR, &[1.0, 0.5]);
            let n = 200usize;
            let mut us = vec![0.0; n + 1];
            let mut psi = vec![0.0; n + 1];
            let status = rp_ruin_curve_bvp(
                m, 12.0, n, 0.0, us.as_mut_ptr(), psi.as_mut_ptr(), ptr::null_mut(),
            );
            assert_eq!(status, RP_OK);
            assert_eq!(us[0], 0.0);
            assert!((us[n] - 12.0).abs() < 1e-12);
            let mut exact0 = f64::NAN;
            assert_eq!(rp_ruin_exact(m, 0.0, &mut exact0), RP_OK);
            assert!((psi[0] - exact0).abs() < 1e-6, "{} vs {exact0}", psi[0]);
            assert!(psi.windows(2).all(|w| w[1] <= w[0] + 1e-12), "curve must not increase");
            rp_model_free(m);
        }
    }

    #[test]
    fn simulation_is_reproducible_through_the_abi() {
        unsafe {
            let m = new_model(RP_CASE_EXP_ERLANG2, 1.0, 1.0, RP_PREMIUM_CONST, &[3.0]);
            let mut a = RpSimResult::default();
            let mut b = RpSimResult::default();
            assert_eq!(rp_simulate(m, 1.0, 60.0, 20_000, 99, &mut a), RP_OK);
            assert_eq!(rp_simulate(m, 1.0, 60.0, 20_000, 99, &mut b), RP_OK);
            assert_eq!(a.psi_hat.to_bits(), b.psi_hat.to_bits());
            assert_eq!(a.ruined_paths, b.ruined_paths);
            assert_eq!(a.n_paths, 20_000);
            assert!(a.psi_hat > 0.0 && a.psi_hat < 1.0);
            rp_model_free(m);
        }
    }

    #[test]
    fn safe_load_and_roots_report() {
        unsafe {
            let m = new_model(RP_CASE_EXP_ERLANG2, 1.0, 1.0, RP_PREMIUM_CONST, &[3.0]);
            let (mut sat, mut regime) = (-1, -1);
            let mut margin = f64::NAN;
            assert_eq!(rp_safe_load(m, &mut sat, &mut margin, &mut regime), RP_OK);
            assert_eq!(sat, 1);
            assert!(margin > 0.0);
            assert_eq!(regime, RP_REGIME_TWO_ROOT);
            let (mut lo, mut hi) = (f64::NAN, f64::NAN);
            assert_eq!(rp_roots(m, 0.0, &mut lo, &mut hi), RP_OK);
            let s13 = 13.0_f64.sqrt();
            assert!((lo + (5.0 + s13) / 6.0).abs() < 1e-10);
            assert!((hi + (5.0 - s13) / 6.0).abs() < 1e-10);
            rp_model_free(m);

            // First-order case: no second-order roots to report.
            let m = new_model(RP_CASE_EXP_EXP, 1.0, 2.0, RP_PREMIUM_CONST, &[1.0]);
            assert_eq!(rp_roots(m, 0.0, &mut lo, &mut hi), RP_ERR_UNSUPPORTED);
            rp_model_free(m);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected_with_messages() {
        unsafe {
            let mut handle: *mut RpModel = ptr::null_mut();
            // Unknown case code.
            let st = rp_model_new(99, 1.0, 2.0, RP_PREMIUM_CONST, [1.0].as_ptr(), 1, &mut handle);
            assert_eq!(st, RP_ERR_INVALID_ARGUMENT);
            // Wrong parameter count.
            let st = rp_model_new(RP_CASE_EXP_EXP, 1.0, 2.0, RP_PREMIUM_LINEAR, [1.0].as_ptr(), 1, &mut handle);
            assert_eq!(st, RP_ERR_INVALID_ARGUMENT);
            let msg = CStr::from_ptr(rp_last_error()).to_str().unwrap();
            assert!(msg.contains("parameter count"), "unexpected message {msg:?}");
            // Negative rate caught by the model validator.
            let st = rp_model_new(RP_CASE_EXP_EXP, -1.0, 2.0, RP_PREMIUM_CONST, [1.0].as_ptr(), 1, &mut handle);
            assert_eq!(st, RP_ERR_INVALID_ARGUMENT);
            // Null out pointers.
            let st = rp_model_new(RP_CASE_EXP_EXP, 1.0, 2.0, RP_PREMIUM_CONST, [1.0].as_ptr(), 1, ptr::null_mut());
            assert_eq!(st, RP_ERR_INVALID_ARGUMENT);
            assert_eq!(rp_ruin_exact(ptr::null(), 0.0, &mut 0.0), RP_ERR_INVALID_ARGUMENT);

            // Numerical failures map to their own status: λ = μc/2 sits on
            // the degenerate safe-load boundary.
            let m = new_model(RP_CASE_EXP_ERLANG2, 1.0, 2.0, RP_PREMIUM_CONST, &[1.0]);
            let st = rp_safe_load(m, ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
            assert_eq!(st, RP_ERR_NUMERICAL);
            rp_model_free(m);

            // Freeing null is a documented no-op.
            rp_model_free(ptr::null_mut());
        }
    }

    #[test]
    fn version_is_a_readable_static_string() {
        unsafe {
            let v = CStr::from_ptr(rp_version()).to_str().unwrap();
            assert_eq!(v, env!("CARGO_PKG_VERSION"));
        }
    }
}
