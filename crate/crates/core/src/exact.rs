//! Closed-form and special-function ruin probabilities.
//!
//! Four model/premium combinations admit explicit solutions and this module
//! implements all of them:
//!
//! * exponential claims and interarrivals with an arbitrary positive premium
//!   — a first-order equation whose solution is a ratio of weighted tail
//!   integrals, evaluated by adaptive quadrature;
//! * the same model with a linear premium — the tail integrals collapse to
//!   upper incomplete gamma functions, evaluated entirely in log space
//!   because the shape parameter `λ/ε` can be large;
//! * constant premiums for all three renewal cases — pure exponential sums
//!   with explicit rates and weights;
//! * linear premiums for the Erlang(2)-interarrival and Erlang(2)-claim
//!   cases — the stable solution of the associated second-order equation is
//!   a confluent hypergeometric (Kummer U) respectively modified Bessel
//!   (I and K) profile, integrated and then scaled to satisfy the boundary
//!   behaviour of the underlying integro-differential equation.
//!
//! Amplitude calibration imposes the residual closure at zero reserve: the
//! defining equation of each model leaves a one- or two-dimensional family
//! of decaying solutions, and the conditions `R(0) = 0` (plus `R'(0) = 0`
//! for Erlang claims) pin the amplitudes uniquely.  Calibrations are
//! memoized per parameter set behind a synchronized map, and every
//! special-function profile is spot-checked against its own differential
//! equation before use; an inconsistent profile or an out-of-range
//! calibrated value reports a calibration error rather than a number.

use crate::error::{Error, Result};
use crate::model::{safe_load_check, ModelCase, ModelSpec, PremiumFunction};
use crate::montecarlo;
use crate::odecore::build_coefficients;
use crate::specfun::{
    integrate_to_infinity, kummer_u, ln_upper_incomplete_gamma, CumulativeIntegral,
    bessel_i_scaled, bessel_k_scaled,
};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// How the points of a [`RuinCurve`] were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Bvp,
    Mc,
    Asymptotic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Bvp => "bvp",
            Method::Mc => "mc",
            Method::Asymptotic => "asymptotic",
        })
    }
}

/// One evaluated point: reserve, ruin probability, error estimate.
#[derive(Clone, Copy, Debug)]
pub struct CurvePoint {
    pub u: f64,
    pub psi: f64,
    pub err: f64,
}

/// A ruin-probability curve tagged with its provenance.
///
/// Invariants: every `psi` lies in `[0, 1]` and the curve is non-increasing
/// in `u` up to the recorded error estimates.
#[derive(Clone, Debug)]
pub struct RuinCurve {
    pub points: Vec<CurvePoint>,
    pub method: Method,
    pub model: ModelSpec,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidInput(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_reserve(u: f64) -> Result<()> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(Error::InvalidInput(format!("reserve must be >= 0 and finite, got {u}")));
    }
    Ok(())
}

fn logsumexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

// ---------------------------------------------------------------------------
// Exponential claims, exponential interarrivals, general premium.
// ---------------------------------------------------------------------------

/// Ruin probability for exponential claims and interarrivals under an
/// arbitrary positive premium, as a ratio of weighted tail integrals.
///
/// The solution of the first-order equation is
/// `ψ(u) = λ·I(u) / (1 + λ·I(0))` with
/// `I(u) = ∫_u^∞ exp(−μv + Λ(v))/p(v) dv` and `Λ(v) = λ·∫_0^v dy/p(y)`.
/// `Λ` has closed forms for constant and linear premiums; any other shape is
/// accumulated by cached quadrature.
///
/// # Errors
/// Divergence when the normalizing integral does not converge — the signature
/// of a violated net-profit condition.
pub fn ruin_exp_exp_general(p: &PremiumFunction, lambda: f64, mu: f64, u: f64) -> Result<f64> {
    let curve = exp_exp_general_points(p, lambda, mu, &[u])?;
    Ok(curve[0].0)
}

fn exp_exp_general_points(
    p: &PremiumFunction,
    lambda: f64,
    mu: f64,
    us: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    for &u in us {
        check_reserve(u)?;
    }
    p.validate()?;

    // Λ(v) = λ ∫_0^v dy/p(y), closed where possible.
    let pf = p.clone();
    let cached: Option<CumulativeIntegral<_>> = match p {
        PremiumFunction::Constant { .. } | PremiumFunction::Linear { .. } => None,
        _ => Some(CumulativeIntegral::new(
            move |y: f64| lambda / pf.eval(y),
            0.0,
            1e-12,
        )),
    };
    let cap = match p {
        PremiumFunction::Constant { c } => *c,
        PremiumFunction::Linear { c, .. } => *c,
        _ => 0.0,
    };
    let lam = |v: f64| -> Result<f64> {
        match p {
            PremiumFunction::Constant { .. } => Ok(lambda * v / cap),
            PremiumFunction::Linear { c: _, eps } => {
                Ok(lambda / eps * (eps * v / cap).ln_1p())
            }
            _ => cached.as_ref().expect("cache built for non-closed premiums").eval(v),
        }
    };

    let tail = |from: f64| -> Result<crate::specfun::QuadratureResult> {
        integrate_to_infinity(
            |v| match lam(v) {
                Ok(l) => {
                    let e = -mu * v + l;
                    // Far tails underflow; 0 is the honest value there.
                    if e < -745.0 {
                        0.0
                    } else {
                        e.exp() / p.eval(v)
                    }
                }
                Err(_) => f64::NAN,
            },
            from,
            1e-11,
        )
        .map_err(|e| match e {
            // The integrand is finite for every finite v, so a non-finite
            // sample can only mean the exponent overflowed — divergence too.
            Error::Divergence(_) | Error::QuadratureNonConvergence(_) | Error::Domain(_) => {
                Error::Divergence(
                    "normalizing integral for the exponential/exponential model diverges; \
                     the net-profit condition is likely violated"
                        .into(),
                )
            }
            other => other,
        })
    };

    let i0 = tail(0.0)?;
    let denom = 1.0 + lambda * i0.value;
    let mut out = Vec::with_capacity(us.len());
    for &u in us {
        let iu = if u == 0.0 { i0.clone() } else { tail(u)? };
        let psi = (lambda * iu.value / denom).clamp(0.0, 1.0);
        let err = (lambda * iu.abs_error_estimate + psi * lambda * i0.abs_error_estimate) / denom;
        out.push((psi, err));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exponential claims, exponential interarrivals, linear premium.
// ---------------------------------------------------------------------------

/// Ruin probability for exponential claims and interarrivals under the
/// linear premium `p(u) = c + εu`, in closed form.
///
/// With `x(u) = μ(c+εu)/ε` and shape `λ/ε`,
///
/// ```text
/// ψ(u) = λ ε^{λ/ε−1} Γ(x(u), λ/ε)
///        ─────────────────────────────────────────────────
///        μ^{λ/ε} c^{λ/ε} e^{−μc/ε} + λ ε^{λ/ε−1} Γ(x(0), λ/ε)
/// ```
///
/// where `Γ(x, η)` is the upper incomplete gamma function.  Every factor is
/// assembled in log space: for small `ε` the shape parameter is huge and the
/// individual factors overflow long before the ratio leaves `(0, 1)`.
pub fn ruin_exp_exp_linear(c: f64, eps: f64, lambda: f64, mu: f64, u: f64) -> Result<f64> {
    check_positive("c", c)?;
    check_positive("eps", eps)?;
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    check_reserve(u)?;

    let shape = lambda / eps;
    let x = |u: f64| mu * (c + eps * u) / eps;
    let ln_num = lambda.ln() + (shape - 1.0) * eps.ln() + ln_upper_incomplete_gamma(x(u), shape)?;
    let ln_free = shape * (mu.ln() + c.ln()) - mu * c / eps;
    let ln_ruin0 =
        lambda.ln() + (shape - 1.0) * eps.ln() + ln_upper_incomplete_gamma(x(0.0), shape)?;
    let psi = (ln_num - logsumexp(ln_free, ln_ruin0)).exp();
    if !psi.is_finite() {
        return Err(Error::Divergence(format!(
            "linear-premium ruin formula overflowed even in log space at u={u}"
        )));
    }
    Ok(psi.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Constant premiums: exponential sums for all three cases.
// ---------------------------------------------------------------------------

/// Ruin probability under a constant premium for any of the three cases,
/// together with the exponential decay rates of the solution.
///
/// Returns `(rates, ψ(u))` where `rates` holds the positive decay rates of
/// each retained exponential term:
///
/// * exponential/exponential: `ψ(u) = λ/(cμ)·e^{−(μ−λ/c)u}`;
/// * Erlang(2) interarrivals: a single exponential — the second
///   characteristic root is positive and carries no weight;
/// * Erlang(2) claims: both roots are negative under the net-profit
///   condition and both terms are retained.
///
/// # Errors
/// Safe-load error when the net-profit condition fails (the certain-ruin
/// regime has `ψ ≡ 1` and no decay rates to report).
pub fn ruin_constant_premium(
    case: ModelCase,
    c: f64,
    lambda: f64,
    mu: f64,
    u: f64,
) -> Result<(Vec<f64>, f64)> {
    check_positive("c", c)?;
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    check_reserve(u)?;
    let m = ModelSpec::new(case, lambda, mu, PremiumFunction::Constant { c })?;
    let report = safe_load_check(&m)?;
    if !report.satisfied {
        return Err(Error::SafeLoad(format!(
            "net-profit condition fails for the constant premium c={c} (margin {:.6}); \
             ruin is certain",
            report.margin
        )));
    }

    match case {
        ModelCase::ExpExp => {
            let r = mu - lambda / c;
            Ok((vec![r], (lambda / (c * mu) * (-r * u).exp()).min(1.0)))
        }
        ModelCase::Erlang2Exp => {
            let disc = (c * mu).powi(2) + 4.0 * c * lambda * mu;
            let r = (c * mu - 2.0 * lambda + disc.sqrt()) / (2.0 * c);
            let weight = (lambda / (lambda + c * r)).powi(2);
            Ok((vec![r], weight * (-r * u).exp()))
        }
        ModelCase::ExpErlang2 => {
            let disc = lambda * lambda + 4.0 * c * lambda * mu;
            let sd = disc.sqrt();
            // Both rates are positive exactly when μc/2 > λ, which the
            // safe-load gate above guarantees.
            let r_fast = (2.0 * c * mu - lambda + sd) / (2.0 * c);
            let r_slow = (2.0 * c * mu - lambda - sd) / (2.0 * c);
            let a_fast = mu / (mu - r_fast);
            let a_slow = mu / (mu - r_slow);
            let w_fast = (a_slow - 1.0) / (a_fast * (a_slow - a_fast));
            let w_slow = (1.0 - a_fast) / (a_slow * (a_slow - a_fast));
            let psi = w_fast * (-r_fast * u).exp() + w_slow * (-r_slow * u).exp();
            Ok((vec![r_fast, r_slow], psi.clamp(0.0, 1.0)))
        }
    }
}

// ---------------------------------------------------------------------------
// Calibration cache shared by the two special-function solvers.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Calibration {
    /// Single amplitude for the Erlang(2)-interarrival solution.
    Kummer { gamma: f64 },
    /// Amplitudes of the two Bessel branches for the Erlang(2)-claim solution.
    Bessel { gamma_i: f64, gamma_k: f64 },
}

type CalibKey = (u8, u64, u64, u64, u64);

fn calibration_cache() -> &'static Mutex<HashMap<CalibKey, Calibration>> {
    static CACHE: OnceLock<Mutex<HashMap<CalibKey, Calibration>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn calib_key(tag: u8, c: f64, eps: f64, lambda: f64, mu: f64) -> CalibKey {
    (tag, c.to_bits(), eps.to_bits(), lambda.to_bits(), mu.to_bits())
}

/// Spot-check that a numerically evaluated profile satisfies the second-order
/// equation it is supposed to solve, by central differences at a few points.
fn ode_residual_check(
    m: &ModelSpec,
    w: &dyn Fn(f64) -> Result<f64>,
    label: &str,
) -> Result<()> {
    let co = build_coefficients(m)?;
    let h = 1e-3;
    for &v in &[0.0f64, 1.0] {
        let v = v.max(h); // one-sided domain: stay off the boundary
        let (wm, w0, wp) = (w(v - h)?, w(v)?, w(v + h)?);
        let d1 = (wp - wm) / (2.0 * h);
        let d2 = (wp - 2.0 * w0 + wm) / (h * h);
        let residual = d2 + co.q1(v) * d1 + co.q0(v) * w0;
        let scale = d2.abs().max((co.q1(v) * d1).abs()).max((co.q0(v) * w0).abs());
        if scale > 0.0 && (residual / scale).abs() > 1e-4 {
            return Err(Error::Calibration(format!(
                "{label} profile violates its differential equation at u={v} \
                 (relative residual {:.3e})",
                residual / scale
            )));
        }
    }
    Ok(())
}

/// Least-squares amplitude fit against a high-precision simulation, used when
/// the residual closure at zero is numerically ill-conditioned.
fn mc_amplitude_fit(m: &ModelSpec, shapes: &[Vec<f64>], us: &[f64]) -> Result<Vec<f64>> {
    let horizon = montecarlo::default_horizon(m, 400.0);
    let mut psi_hat = Vec::with_capacity(us.len());
    for &u in us {
        psi_hat.push(montecarlo::simulate_ruin(m, u, horizon, 400_000, 0x5eed)?.psi_hat);
    }
    match shapes.len() {
        1 => {
            let num: f64 = shapes[0].iter().zip(&psi_hat).map(|(s, p)| s * p).sum();
            let den: f64 = shapes[0].iter().map(|s| s * s).sum();
            Ok(vec![num / den])
        }
        2 => {
            // Two shapes, two collocation points: solve directly.
            let (a, b, c_, d) = (shapes[0][0], shapes[1][0], shapes[0][1], shapes[1][1]);
            let det = a * d - b * c_;
            if det.abs() < 1e-14 * (a * d).abs().max((b * c_).abs()) {
                return Err(Error::Calibration(
                    "simulation fallback is also degenerate; cannot calibrate amplitudes".into(),
                ));
            }
            Ok(vec![
                (psi_hat[0] * d - b * psi_hat[1]) / det,
                (a * psi_hat[1] - psi_hat[0] * c_) / det,
            ])
        }
        n => Err(Error::Internal(format!("amplitude fit with {n} shapes"))),
    }
}

// ---------------------------------------------------------------------------
// Erlang(2) interarrivals, exponential claims, linear premium.
// ---------------------------------------------------------------------------

/// Decaying solution of the second-order equation for Erlang(2)
/// interarrivals under `p(u) = c + εu`: with `x = μ(c+εu)/ε` and
/// `L = λ/ε`, the profile is `w(u) = e^{−x} x^{L−1} U(L+1, 1, x)`.
fn kummer_w(c: f64, eps: f64, lambda: f64, mu: f64, v: f64) -> Result<f64> {
    let shape = lambda / eps;
    let x = mu * (c + eps * v) / eps;
    let uval = kummer_u(shape + 1.0, 1.0, x)?;
    let ln_pow = -x + (shape - 1.0) * x.ln();
    if ln_pow < -745.0 {
        return Ok(0.0);
    }
    Ok(ln_pow.exp() * uval)
}

/// d/du of [`kummer_w`] via the contiguous relation
/// `d/dz U(a,b,z) = −a·U(a+1, b+1, z)`.
fn kummer_w_prime(c: f64, eps: f64, lambda: f64, mu: f64, v: f64) -> Result<f64> {
    let shape = lambda / eps;
    let a = shape + 1.0;
    let x = mu * (c + eps * v) / eps;
    let u1 = kummer_u(a, 1.0, x)?;
    let u2 = kummer_u(a + 1.0, 2.0, x)?;
    let ln_pow = -x + (shape - 2.0) * x.ln();
    if ln_pow < -745.0 {
        return Ok(0.0);
    }
    Ok(mu * ln_pow.exp() * ((shape - 1.0 - x) * u1 - a * x * u2))
}

fn kummer_tail(c: f64, eps: f64, lambda: f64, mu: f64, u: f64) -> Result<crate::specfun::QuadratureResult> {
    let r = integrate_to_infinity(
        |v| kummer_w(c, eps, lambda, mu, v).unwrap_or(f64::NAN),
        u,
        1e-12,
    )?;
    if !r.value.is_finite() {
        return Err(Error::Internal(format!(
            "tail integral of the Kummer profile is non-finite at u={u}"
        )));
    }
    Ok(r)
}

fn erlang2exp_linear_gamma(c: f64, eps: f64, lambda: f64, mu: f64) -> Result<f64> {
    let key = calib_key(1, c, eps, lambda, mu);
    if let Some(Calibration::Kummer { gamma }) = calibration_cache().lock().unwrap().get(&key) {
        return Ok(*gamma);
    }

    let m = ModelSpec::new(
        ModelCase::Erlang2Exp,
        lambda,
        mu,
        PremiumFunction::Linear { c, eps },
    )?;
    ode_residual_check(&m, &|v| kummer_w(c, eps, lambda, mu, v), "Kummer")?;

    let w0 = kummer_w(c, eps, lambda, mu, 0.0)?;
    let wp0 = kummer_w_prime(c, eps, lambda, mu, 0.0)?;
    let s0 = kummer_tail(c, eps, lambda, mu, 0.0)?;

    // Residual closure at zero reserve: R(0) = 0 for ψ = γ·s gives
    //   γ·[−p₀²·w'(0) − (p₀p₀' − 2λp₀)·w(0) + λ²·s(0)] = λ².
    let term_dw = -c * c * wp0;
    let term_w = -(c * eps - 2.0 * lambda * c) * w0;
    let term_s = lambda * lambda * s0.value;
    let denom = term_dw + term_w + term_s;
    let scale = term_dw.abs() + term_w.abs() + term_s.abs();

    let gamma = if denom.is_finite() && denom.abs() > 1e-8 * scale {
        lambda * lambda / denom
    } else {
        // Closure degenerate at this parameter set: fit the amplitude to a
        // high-precision simulation instead.
        let s1 = kummer_tail(c, eps, lambda, mu, 1.0)?;
        let fit = mc_amplitude_fit(&m, &[vec![s0.value, s1.value]], &[0.0, 1.0])?;
        fit[0]
    };

    let psi0 = gamma * s0.value;
    if !(psi0 > 0.0 && psi0 <= 1.0 + 1e-9) {
        return Err(Error::Calibration(format!(
            "calibrated zero-reserve ruin probability {psi0:.6e} is outside (0, 1]"
        )));
    }

    calibration_cache().lock().unwrap().insert(key, Calibration::Kummer { gamma });
    Ok(gamma)
}

/// Ruin probability for Erlang(2) interarrivals and exponential claims under
/// the linear premium `p(u) = c + εu`.
///
/// The decaying solution of the associated second-order equation is a
/// Kummer-U profile in the variable `x = μ(c+εu)/ε`; its tail integral,
/// scaled by the residual closure at zero reserve, is the ruin probability.
/// Ill-conditioned closures fall back to a least-squares fit against a
/// high-precision simulation, and the calibrated amplitude is memoized per
/// parameter set.
pub fn ruin_erlang2exp_linear(c: f64, eps: f64, lambda: f64, mu: f64, u: f64) -> Result<f64> {
    check_positive("c", c)?;
    check_positive("eps", eps)?;
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    check_reserve(u)?;
    let gamma = erlang2exp_linear_gamma(c, eps, lambda, mu)?;
    let tail = kummer_tail(c, eps, lambda, mu, u)?;
    let psi = gamma * tail.value;
    if psi < -1e-9 || psi > 1.0 + 1e-9 {
        return Err(Error::Calibration(format!(
            "ruin probability {psi:.6e} at u={u} is outside [0, 1]"
        )));
    }
    Ok(psi.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Exponential interarrivals, Erlang(2) claims, linear premium.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Branch {
    Decaying, // K_ν: the WKB branch below the carrier exponential
    Growing,  // I_ν: the branch that dominates the far tail of ψ
}

/// The two solution branches for Erlang(2) claims under `p(u) = c + εu`:
/// with `P = c + εu`, order `ν = λ/ε − 1` and `k = 2√(λμ)/ε`,
/// `w(u) = e^{−(μ/ε)P} P^{ν/2} B_ν(k√P)` where `B` is `K` or `I`.
/// Both are positive and integrable; both are needed, because the residual
/// closure at zero reserve has two conditions.
fn bessel_w(c: f64, eps: f64, lambda: f64, mu: f64, v: f64, branch: Branch) -> Result<f64> {
    let p = c + eps * v;
    let order = (lambda / eps - 1.0).abs();
    let arg = 2.0 * (lambda * mu * p).sqrt() / eps;
    let common = -(mu / eps) * p + 0.5 * (lambda / eps - 1.0) * p.ln();
    let ln = match branch {
        Branch::Decaying => common - arg,
        Branch::Growing => common + arg,
    };
    if ln < -745.0 {
        return Ok(0.0);
    }
    let scaled = match branch {
        Branch::Decaying => bessel_k_scaled(order, arg)?,
        Branch::Growing => bessel_i_scaled(order, arg)?,
    };
    Ok(ln.exp() * scaled)
}

/// d/du of [`bessel_w`] via `K'_ν(x) = −K_{ν+1}(x) + (ν/x)K_ν(x)` and
/// `I'_ν(x) = I_{ν+1}(x) + (ν/x)I_ν(x)` (orders only ever move upward, so a
/// reflected non-integer order stays in range).
fn bessel_w_prime(
    c: f64,
    eps: f64,
    lambda: f64,
    mu: f64,
    v: f64,
    branch: Branch,
) -> Result<f64> {
    let p = c + eps * v;
    let nu = lambda / eps - 1.0;
    let order = nu.abs();
    let arg = 2.0 * (lambda * mu * p).sqrt() / eps;
    let darg = (lambda * mu / p).sqrt(); // d(arg)/dv = kε/(2√P)
    let dcommon = -mu + 0.5 * nu * eps / p;
    let common = -(mu / eps) * p + 0.5 * nu * p.ln();
    let ln = match branch {
        Branch::Decaying => common - arg,
        Branch::Growing => common + arg,
    };
    if ln < -745.0 {
        return Ok(0.0);
    }
    match branch {
        Branch::Decaying => {
            let k0 = bessel_k_scaled(order, arg)?;
            let k1 = bessel_k_scaled(order + 1.0, arg)?;
            let dk = -k1 + (order / arg) * k0; // scaled K'_ν + K_ν cancels the e^{−arg} shift
            Ok(ln.exp() * (dcommon * k0 + darg * dk))
        }
        Branch::Growing => {
            let i0 = bessel_i_scaled(order, arg)?;
            let i1 = bessel_i_scaled(order + 1.0, arg)?;
            let di = i1 + (order / arg) * i0;
            Ok(ln.exp() * (dcommon * i0 + darg * di))
        }
    }
}

fn bessel_tail(
    c: f64,
    eps: f64,
    lambda: f64,
    mu: f64,
    u: f64,
    branch: Branch,
) -> Result<crate::specfun::QuadratureResult> {
    let r = integrate_to_infinity(
        |v| bessel_w(c, eps, lambda, mu, v, branch).unwrap_or(f64::NAN),
        u,
        1e-12,
    )?;
    if !r.value.is_finite() {
        return Err(Error::Internal(format!(
            "tail integral of the Bessel profile is non-finite at u={u}"
        )));
    }
    Ok(r)
}

fn experlang2_linear_gammas(c: f64, eps: f64, lambda: f64, mu: f64) -> Result<(f64, f64)> {
    let key = calib_key(2, c, eps, lambda, mu);
    if let Some(Calibration::Bessel { gamma_i, gamma_k }) =
        calibration_cache().lock().unwrap().get(&key)
    {
        return Ok((*gamma_i, *gamma_k));
    }

    let m = ModelSpec::new(
        ModelCase::ExpErlang2,
        lambda,
        mu,
        PremiumFunction::Linear { c, eps },
    )?;
    ode_residual_check(&m, &|v| bessel_w(c, eps, lambda, mu, v, Branch::Decaying), "Bessel K")?;
    ode_residual_check(&m, &|v| bessel_w(c, eps, lambda, mu, v, Branch::Growing), "Bessel I")?;

    let wi0 = bessel_w(c, eps, lambda, mu, 0.0, Branch::Growing)?;
    let wk0 = bessel_w(c, eps, lambda, mu, 0.0, Branch::Decaying)?;
    let wip0 = bessel_w_prime(c, eps, lambda, mu, 0.0, Branch::Growing)?;
    let wkp0 = bessel_w_prime(c, eps, lambda, mu, 0.0, Branch::Decaying)?;
    let si0 = bessel_tail(c, eps, lambda, mu, 0.0, Branch::Growing)?;
    let sk0 = bessel_tail(c, eps, lambda, mu, 0.0, Branch::Decaying)?;

    // Residual closure at zero reserve for ψ = γ_I·s_I + γ_K·s_K.  The
    // Erlang(2) claim density vanishes at zero, which turns the closure into
    // the two conditions R(0) = 0 and R'(0) = 0:
    //   γ_I(p₀·wI(0) + λ·sI(0)) + γ_K(p₀·wK(0) + λ·sK(0)) = λ
    //   γ_I((λ−p₀')wI(0) − p₀·wI'(0)) + γ_K((λ−p₀')wK(0) − p₀·wK'(0)) = 0.
    let a11 = c * wi0 + lambda * si0.value;
    let a12 = c * wk0 + lambda * sk0.value;
    let a21 = (lambda - eps) * wi0 - c * wip0;
    let a22 = (lambda - eps) * wk0 - c * wkp0;
    let det = a11 * a22 - a12 * a21;
    let det_scale = (a11 * a22).abs().max((a12 * a21).abs());

    let (gamma_i, gamma_k) = if det.is_finite() && det.abs() > 1e-10 * det_scale {
        (lambda * a22 / det, -lambda * a21 / det)
    } else {
        let si1 = bessel_tail(c, eps, lambda, mu, 1.0, Branch::Growing)?;
        let sk1 = bessel_tail(c, eps, lambda, mu, 1.0, Branch::Decaying)?;
        let fit = mc_amplitude_fit(
            &m,
            &[vec![si0.value, si1.value], vec![sk0.value, sk1.value]],
            &[0.0, 1.0],
        )?;
        (fit[0], fit[1])
    };

    let psi0 = gamma_i * si0.value + gamma_k * sk0.value;
    if !(psi0 > 0.0 && psi0 <= 1.0 + 1e-9) {
        return Err(Error::Calibration(format!(
            "calibrated zero-reserve ruin probability {psi0:.6e} is outside (0, 1]"
        )));
    }

    calibration_cache()
        .lock()
        .unwrap()
        .insert(key, Calibration::Bessel { gamma_i, gamma_k });
    Ok((gamma_i, gamma_k))
}

/// Ruin probability for exponential interarrivals and Erlang(2) claims under
/// the linear premium `p(u) = c + εu`, plus an order flag.
///
/// The two decaying solutions of the associated second-order equation are
/// modified-Bessel profiles of order `ν = λ/ε − 1`; the two-condition
/// residual closure at zero reserve fixes both amplitudes.  The returned
/// flag is `true` when `ν` is an integer — the regime the reduction is
/// derived for.  Non-integer orders are evaluated best-effort with the
/// reflected order `|ν|` (a valid solution basis, since the closure absorbs
/// any change of basis) and flagged `false`.
pub fn ruin_experlang2_linear(
    c: f64,
    eps: f64,
    lambda: f64,
    mu: f64,
    u: f64,
) -> Result<(f64, bool)> {
    check_positive("c", c)?;
    check_positive("eps", eps)?;
    check_positive("lambda", lambda)?;
    check_positive("mu", mu)?;
    check_reserve(u)?;
    let nu = lambda / eps - 1.0;
    let integer_order = (nu - nu.round()).abs() < 1e-9;
    let (gamma_i, gamma_k) = experlang2_linear_gammas(c, eps, lambda, mu)?;
    let si = bessel_tail(c, eps, lambda, mu, u, Branch::Growing)?;
    let sk = bessel_tail(c, eps, lambda, mu, u, Branch::Decaying)?;
    let psi = gamma_i * si.value + gamma_k * sk.value;
    if psi < -1e-9 || psi > 1.0 + 1e-9 {
        return Err(Error::Calibration(format!(
            "ruin probability {psi:.6e} at u={u} is outside [0, 1]"
        )));
    }
    Ok((psi.clamp(0.0, 1.0), integer_order))
}

// ---------------------------------------------------------------------------
// Curve assembly.
// ---------------------------------------------------------------------------

/// Evaluates the exact ruin curve for a model on a reserve grid, dispatching
/// to whichever closed-form or special-function solution covers it.
///
/// # Errors
/// Unsupported when the model/premium pair has no exact solution (the BVP
/// solver covers those); otherwise whatever the underlying solver reports.
pub fn exact_curve(m: &ModelSpec, us: &[f64]) -> Result<RuinCurve> {
    let mut points = Vec::with_capacity(us.len());
    match (m.case, &m.premium) {
        (ModelCase::ExpExp, PremiumFunction::Constant { c }) => {
            for &u in us {
                let (_, psi) = ruin_constant_premium(m.case, *c, m.lambda, m.mu, u)?;
                points.push(CurvePoint { u, psi, err: 4.0 * f64::EPSILON * psi });
            }
        }
        (ModelCase::ExpExp, PremiumFunction::Linear { c, eps }) => {
            for &u in us {
                let psi = ruin_exp_exp_linear(*c, *eps, m.lambda, m.mu, u)?;
                points.push(CurvePoint { u, psi, err: 1e-10 * psi });
            }
        }
        (ModelCase::ExpExp, _) => {
            for (&u, (psi, err)) in
                us.iter().zip(exp_exp_general_points(&m.premium, m.lambda, m.mu, us)?)
            {
                points.push(CurvePoint { u, psi, err });
            }
        }
        (case, PremiumFunction::Constant { c }) => {
            for &u in us {
                let (_, psi) = ruin_constant_premium(case, *c, m.lambda, m.mu, u)?;
                points.push(CurvePoint { u, psi, err: 8.0 * f64::EPSILON * psi });
            }
        }
        (ModelCase::Erlang2Exp, PremiumFunction::Linear { c, eps }) => {
            let gamma = erlang2exp_linear_gamma(*c, *eps, m.lambda, m.mu)?;
            for &u in us {
                let tail = kummer_tail(*c, *eps, m.lambda, m.mu, u)?;
                let psi = (gamma * tail.value).clamp(0.0, 1.0);
                let err = gamma.abs() * tail.abs_error_estimate + 1e-9 * psi;
                points.push(CurvePoint { u, psi, err });
            }
        }
        (ModelCase::ExpErlang2, PremiumFunction::Linear { c, eps }) => {
            let (gi, gk) = experlang2_linear_gammas(*c, *eps, m.lambda, m.mu)?;
            for &u in us {
                let si = bessel_tail(*c, *eps, m.lambda, m.mu, u, Branch::Growing)?;
                let sk = bessel_tail(*c, *eps, m.lambda, m.mu, u, Branch::Decaying)?;
                let psi = (gi * si.value + gk * sk.value).clamp(0.0, 1.0);
                let err = gi.abs() * si.abs_error_estimate
                    + gk.abs() * sk.abs_error_estimate
                    + 1e-9 * psi;
                points.push(CurvePoint { u, psi, err });
            }
        }
        (case, premium) => {
            return Err(Error::Unsupported(format!(
                "no exact solution for the {case} case with premium {premium:?}; \
                 use the boundary-value solver"
            )));
        }
    }
    Ok(RuinCurve { points, method: Method::Exact, model: m.clone() })
}
