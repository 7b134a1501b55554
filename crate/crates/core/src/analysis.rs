//! Large-reserve asymptotics: decay envelopes, constant fitting, and
//! linear-vs-constant premium comparisons.
//!
//! Each model case admits an asymptotic shape for ψ(u) as u → ∞ — an
//! exponential, a mixture of two, or an integral of a slowly-modulated
//! exponential — known only up to a multiplicative constant.  This module
//! builds those **unnormalized envelopes**, fits the missing constant
//! against a reference curve (exact or boundary-value), and tabulates how
//! fast a growing premium beats a constant one.
//!
//! Stability caveats are surfaced, not smoothed over: parameter regimes in
//! which no decaying asymptotic solution exists (certain-ruin constants for
//! Erlang(2) interarrivals) produce a hypothesis-violation error, and a fit
//! whose ψ/envelope ratio is still drifting is rejected rather than
//! averaged.

use crate::error::{Error, Result};
use crate::exact::{
    ruin_constant_premium, ruin_erlang2exp_linear, ruin_exp_exp_linear, ruin_experlang2_linear,
    RuinCurve,
};
use crate::model::{
    classify_premium, safe_load_check, ModelCase, ModelSpec, PremiumClass, PremiumFunction,
    TailRegime,
};
use crate::odecore::{build_coefficients, stable_integrand, RootIndex};
use crate::specfun::{integrate_to_infinity, CumulativeIntegral};
use std::fmt;
use std::sync::Arc;

/// Premium regime tag carried by an [`AsymptoticForm`].
///
/// `Linear` is singled out from the rest of P2 because the linear-premium
/// envelopes have closed forms the generic machinery only reproduces
/// asymptotically.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeClass {
    Constant,
    P1,
    P2,
    Linear,
}

impl fmt::Display for EnvelopeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvelopeClass::Constant => "constant",
            EnvelopeClass::P1 => "p1",
            EnvelopeClass::P2 => "p2",
            EnvelopeClass::Linear => "linear",
        })
    }
}

/// An asymptotic shape for ψ, unnormalized until [`fit_constant`] runs.
///
/// Invariants: the envelope is positive and eventually decreasing (checked
/// at construction); `fitted_constant` is positive once set.  A zero
/// `fit_window` means "pick automatically when fitting".
#[derive(Clone)]
pub struct AsymptoticForm {
    pub case: ModelCase,
    pub class: EnvelopeClass,
    envelope: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
    pub fitted_constant: Option<f64>,
    pub fit_window: (f64, f64),
    /// Relative spread of ψ/envelope across the fit window, once fitted.
    pub spread: Option<f64>,
}

impl fmt::Debug for AsymptoticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AsymptoticForm")
            .field("case", &self.case)
            .field("class", &self.class)
            .field("fitted_constant", &self.fitted_constant)
            .field("fit_window", &self.fit_window)
            .field("spread", &self.spread)
            .finish_non_exhaustive()
    }
}

impl AsymptoticForm {
    /// The unnormalized envelope value at reserve `u`.
    pub fn envelope_at(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::InvalidInput(format!("reserve must be >= 0, got {u}")));
        }
        (self.envelope)(u)
    }

    /// `fitted_constant × envelope(u)`: the calibrated asymptotic estimate.
    ///
    /// # Errors
    /// `InvalidInput` before [`fit_constant`] has supplied the constant.
    pub fn psi_at(&self, u: f64) -> Result<f64> {
        let c = self.fitted_constant.ok_or_else(|| {
            Error::InvalidInput("asymptotic constant not fitted yet; call fit_constant first".into())
        })?;
        Ok(c * self.envelope_at(u)?)
    }
}

// ---------------------------------------------------------------------------
// Envelope construction.
// ---------------------------------------------------------------------------

/// Builds the case's unnormalized asymptotic envelope.
///
/// Shapes by case and premium regime:
///
/// * exponential/exponential — `e^{−μu + λ∫₀^u dw/p(w)}`, divided by `p(u)`
///   for growing (P2) premiums; for a linear premium this reduces to
///   `e^{−μu}(c+εu)^{λ/ε−1}`;
/// * Erlang(2) interarrivals — `−e^{ρ̂₁u}/ρ̂₁` with ρ̂₁ the stable root of
///   the limiting constant problem (constant/bounded premiums); the closed
///   integral `∫_u^∞ e^{−μy}((c+εy)/c)^{−2}dy` for linear premiums; the
///   slowly-modulated stable-root integral for other growing premiums;
/// * Erlang(2) claims — one or two exponentials according to the
///   `λ ⋛ μc/2` regime for constant/bounded premiums (both terms carry the
///   exact mixture weights when both decay), and the sum of the two
///   modulated-root integrals for growing premiums.
///
/// # Errors
/// `HypothesisViolated` when no decaying asymptotic solution exists (e.g.
/// Erlang(2)-interarrival constants with `2c/λ < 1/μ`, where both special
/// solutions are unstable); `BoundaryDegenerate` on safe-load equalities.
pub fn envelope(m: &ModelSpec) -> Result<AsymptoticForm> {
    let m = ModelSpec::new(m.case, m.lambda, m.mu, m.premium.clone())?;
    let class = match (&m.premium, classify_premium(&m.premium)?) {
        (PremiumFunction::Linear { .. }, _) => EnvelopeClass::Linear,
        (_, PremiumClass::Constant) => EnvelopeClass::Constant,
        (_, PremiumClass::P1) => EnvelopeClass::P1,
        (_, PremiumClass::P2) => EnvelopeClass::P2,
    };
    let env: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync> = match m.case {
        ModelCase::ExpExp => exp_exp_envelope(&m, class),
        ModelCase::Erlang2Exp => match class {
            EnvelopeClass::Constant | EnvelopeClass::P1 => erlang2_stable_exponential(&m)?,
            EnvelopeClass::Linear => erlang2_linear_closed(&m),
            EnvelopeClass::P2 => erlang2_wkb_integral(&m)?,
        },
        ModelCase::ExpErlang2 => match class {
            EnvelopeClass::Constant | EnvelopeClass::P1 => experlang2_exponentials(&m)?,
            EnvelopeClass::Linear | EnvelopeClass::P2 => experlang2_wkb_sum(&m)?,
        },
    };
    check_eventually_decreasing(env.as_ref())?;
    Ok(AsymptoticForm {
        case: m.case,
        class,
        envelope: env,
        fitted_constant: None,
        fit_window: (0.0, 0.0),
        spread: None,
    })
}

/// Probes the envelope at nested reserve pairs and demands decrease at the
/// deepest pair that is still above the float floor.  Growth there means
/// the parameters violate the stability hypotheses the shapes rest on.
fn check_eventually_decreasing(env: &(dyn Fn(f64) -> Result<f64> + Send + Sync)) -> Result<()> {
    for (a, b) in [(100.0, 150.0), (50.0, 75.0), (20.0, 30.0)] {
        let ea = env(a)?;
        let eb = env(b)?;
        if ea > 0.0 {
            if eb < ea {
                return Ok(());
            }
            return Err(Error::HypothesisViolated(format!(
                "asymptotic envelope does not decrease between u = {a} and u = {b} \
                 ({ea:.6e} → {eb:.6e}); the model is outside the theorem's hypotheses"
            )));
        }
        // Underflowed already at the left probe: look closer in.
    }
    // Decay too fast to observe even at u = 20: certainly decreasing.
    Ok(())
}

fn exp_exp_envelope(
    m: &ModelSpec,
    class: EnvelopeClass,
) -> Arc<dyn Fn(f64) -> Result<f64> + Send + Sync> {
    let (lambda, mu) = (m.lambda, m.mu);
    let premium = m.premium.clone();
    let divide_by_p = matches!(class, EnvelopeClass::Linear | EnvelopeClass::P2);
    // ∫₀^u dw/p(w): closed for the constant and linear families, cached
    // quadrature otherwise.
    let cumulative: Option<Arc<CumulativeIntegral<_>>> = match &premium {
        PremiumFunction::Constant { .. } | PremiumFunction::Linear { .. } => None,
        _ => {
            let p = premium.clone();
            Some(Arc::new(CumulativeIntegral::new(move |w| 1.0 / p.eval(w), 0.0, 1e-10)))
        }
    };
    Arc::new(move |u: f64| {
        let t = match &premium {
            PremiumFunction::Constant { c } => u / c,
            PremiumFunction::Linear { c, eps } => (eps * u / c).ln_1p() / eps,
            _ => cumulative.as_ref().expect("cache built for this family").eval(u)?,
        };
        let mut exponent = -mu * u + lambda * t;
        if divide_by_p {
            exponent -= premium.eval(u).ln();
        }
        Ok(exponent.exp())
    })
}

/// `−e^{ρ̂₁u}/ρ̂₁` with ρ̂₁ < 0 the stable characteristic root of the
/// limiting constant-premium problem.
fn erlang2_stable_exponential(
    m: &ModelSpec,
) -> Result<Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>> {
    let report = safe_load_check(m)?;
    if !report.satisfied {
        return Err(Error::HypothesisViolated(format!(
            "safe-load margin 2c/λ − 1/μ = {:.6} < 0: both asymptotic special solutions \
             are unstable, so no decaying envelope exists (ruin is certain)",
            report.margin
        )));
    }
    let (lambda, mu) = (m.lambda, m.mu);
    let c = m.premium.level_at_infinity().unwrap_or_else(|| m.premium.eval(1e6));
    let disc = (c * mu).powi(2) + 4.0 * c * lambda * mu;
    let rate = (c * mu - 2.0 * lambda + disc.sqrt()) / (2.0 * c);
    Ok(Arc::new(move |u: f64| Ok((-rate * u).exp() / rate)))
}

/// Closed linear-premium envelope `∫_u^∞ e^{−μy}((c+εy)/c)^{−2} dy`.
fn erlang2_linear_closed(m: &ModelSpec) -> Arc<dyn Fn(f64) -> Result<f64> + Send + Sync> {
    let mu = m.mu;
    let (c, eps) = match m.premium {
        PremiumFunction::Linear { c, eps } => (c, eps),
        _ => unreachable!("called for linear premiums only"),
    };
    Arc::new(move |u: f64| {
        let q = integrate_to_infinity(
            |y| (-mu * y - 2.0 * ((c + eps * y) / c).ln()).exp(),
            u,
            1e-12,
        )?;
        Ok(q.value)
    })
}

/// Growing-premium envelope `∫_u^∞ exp{∫₀^y (ρ₁ + ρ₁⁽¹⁾)} dy` from the
/// stable characteristic root with its first-order correction.
fn erlang2_wkb_integral(
    m: &ModelSpec,
) -> Result<Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>> {
    let co = build_coefficients(m)?;
    let stable = stable_integrand(&co, RootIndex::One, 1e-10)?;
    Ok(Arc::new(move |u: f64| {
        let q = integrate_to_infinity(
            |y| stable.ln_eval(y).map(f64::exp).unwrap_or(f64::NAN),
            u,
            1e-12,
        )?;
        Ok(q.value)
    }))
}

/// One or two exponentials for Erlang(2) claims under constant/bounded
/// premiums, selected by the tail regime `λ ⋛ μc/2` at the limiting level.
///
/// In the two-root (net-profit) regime both terms carry the exact mixture
/// weights of the limiting constant-premium solution, so the envelope is
/// the full asymptotic shape and the fitted constant for an exactly
/// constant premium is 1.  In the one-root regime only the fast root
/// decays; the envelope is that single exponential.
fn experlang2_exponentials(
    m: &ModelSpec,
) -> Result<Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>> {
    let report = safe_load_check(m)?;
    let (lambda, mu) = (m.lambda, m.mu);
    let c = m.premium.level_at_infinity().unwrap_or_else(|| m.premium.eval(1e6));
    match report.regime {
        Some(TailRegime::TwoRoot) => Ok(Arc::new(move |u: f64| {
            let (_, psi) = ruin_constant_premium(ModelCase::ExpErlang2, c, lambda, mu, u)?;
            Ok(psi)
        })),
        Some(TailRegime::OneRoot) => {
            let disc = lambda * lambda + 4.0 * c * lambda * mu;
            let r_fast = (2.0 * c * mu - lambda + disc.sqrt()) / (2.0 * c);
            Ok(Arc::new(move |u: f64| Ok((-r_fast * u).exp())))
        }
        None => Err(Error::Internal(
            "safe-load report carries no tail regime for an Erlang(2)-claim model".into(),
        )),
    }
}

/// Growing-premium envelope for Erlang(2) claims: the sum of the two
/// modulated-root tail integrals.
///
/// Both integrands decay at the same leading exponential order with
/// opposite sub-exponential corrections, and the slower branch dominates
/// every tail observation; a single overall constant is therefore all a
/// fit can resolve, and the subdominant branch's own constant is absorbed
/// into it (weights 1:1 inside the sum).
fn experlang2_wkb_sum(
    m: &ModelSpec,
) -> Result<Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>> {
    let co = build_coefficients(m)?;
    let fast = stable_integrand(&co, RootIndex::One, 1e-10)?;
    let slow = stable_integrand(&co, RootIndex::Two, 1e-10)?;
    Ok(Arc::new(move |u: f64| {
        let qf = integrate_to_infinity(
            |y| fast.ln_eval(y).map(f64::exp).unwrap_or(f64::NAN),
            u,
            1e-12,
        )?;
        let qs = integrate_to_infinity(
            |y| slow.ln_eval(y).map(f64::exp).unwrap_or(f64::NAN),
            u,
            1e-12,
        )?;
        Ok(qf.value + qs.value)
    }))
}

// ---------------------------------------------------------------------------
// Constant fitting.
// ---------------------------------------------------------------------------

/// Fits the unknown multiplicative constant of an asymptotic form against a
/// reference curve: the geometric mean of ψ/envelope over the fit window
/// (log-space least squares with zero slope), recording the relative spread.
///
/// A zero `fit_window` on the form selects `[u₁, 2u₁]` automatically, where
/// `u₁` is the first reserve at which the reference drops below 1e−4 —
/// deep enough in the tail for the asymptotics, well above float noise.
///
/// # Errors
/// `InvalidInput` when the reference does not reach the window, the window
/// holds fewer than three usable points, or the envelope vanishes there;
/// `FitNonConvergent` when ψ/envelope varies by more than 10% across the
/// window (the asymptotic regime has not been reached — move it right).
pub fn fit_constant(mut form: AsymptoticForm, reference: &RuinCurve) -> Result<AsymptoticForm> {
    let pts = &reference.points;
    if pts.len() < 3 {
        return Err(Error::InvalidInput(
            "reference curve needs at least 3 points to fit a constant".into(),
        ));
    }
    let (lo, hi) = if form.fit_window == (0.0, 0.0) {
        let u1 = pts
            .iter()
            .find(|p| p.psi > 0.0 && p.psi < 1e-4)
            .map(|p| p.u)
            .ok_or_else(|| {
                Error::InvalidInput(
                    "reference curve never decays below 1e-4; extend its grid before fitting"
                        .into(),
                )
            })?;
        (u1, 2.0 * u1)
    } else {
        form.fit_window
    };
    if !(lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidInput(format!(
            "fit window [{lo}, {hi}] is not an increasing non-negative interval"
        )));
    }
    let last_u = pts.last().expect("len checked").u;
    if last_u + 1e-9 < hi {
        return Err(Error::InvalidInput(format!(
            "reference curve ends at u = {last_u}, before the fit window [{lo}, {hi}]"
        )));
    }

    let mut ratios = Vec::new();
    for p in pts.iter().filter(|p| p.u >= lo - 1e-12 && p.u <= hi + 1e-12) {
        let env = form.envelope_at(p.u)?;
        if !(env > 0.0) {
            return Err(Error::InvalidInput(format!(
                "envelope vanishes at u = {} inside the fit window; the window is too deep",
                p.u
            )));
        }
        if p.psi > 0.0 {
            ratios.push(p.psi / env);
        }
    }
    if ratios.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "fit window [{lo}, {hi}] holds {} usable points; need at least 3",
            ratios.len()
        )));
    }
    let mean_ln = ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64;
    let fitted = mean_ln.exp();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / fitted;
    if spread > 0.10 {
        return Err(Error::FitNonConvergent(format!(
            "ψ/envelope varies by {:.1}% across [{lo:.3}, {hi:.3}]; the asymptotic regime \
             is not reached — move the fit window deeper into the tail",
            100.0 * spread
        )));
    }
    form.fitted_constant = Some(fitted);
    form.fit_window = (lo, hi);
    form.spread = Some(spread);
    Ok(form)
}

// ---------------------------------------------------------------------------
// Linear-vs-constant comparison.
// ---------------------------------------------------------------------------

/// One row of the linear-vs-constant premium comparison.
#[derive(Clone, Copy, Debug)]
pub struct ComparisonRow {
    pub u: f64,
    pub psi_linear: f64,
    pub psi_constant: f64,
    pub ratio: f64,
}

/// Result of [`compare_linear_vs_constant`].
#[derive(Clone, Debug)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    /// Set when the constant-premium model sat on the safe-load boundary and
    /// ψ ≡ 1 (certain ruin) was substituted for it.
    pub note: Option<String>,
}

/// Tabulates ψ under `p(u) = c + εu` against ψ under `p ≡ c` on a reserve
/// grid.  The ratio column quantifies how fast the growing premium wins:
/// it tends to zero in every case, eventually monotonically.
///
/// A constant model exactly on the safe-load boundary has ψ ≡ 1 in the
/// limit; that value is substituted and reported in `note` rather than
/// failing the whole comparison.
///
/// # Errors
/// `SafeLoad` when the constant model strictly violates the net-profit
/// condition; otherwise whatever the exact evaluators report.
pub fn compare_linear_vs_constant(
    case: ModelCase,
    c: f64,
    eps: f64,
    lambda: f64,
    mu: f64,
    us: &[f64],
) -> Result<Comparison> {
    let mut note = None;
    let mut rows = Vec::with_capacity(us.len());
    for &u in us {
        let psi_linear = match case {
            ModelCase::ExpExp => ruin_exp_exp_linear(c, eps, lambda, mu, u)?,
            ModelCase::Erlang2Exp => ruin_erlang2exp_linear(c, eps, lambda, mu, u)?,
            ModelCase::ExpErlang2 => ruin_experlang2_linear(c, eps, lambda, mu, u)?.0,
        };
        let psi_constant = match ruin_constant_premium(case, c, lambda, mu, u) {
            Ok((_, v)) => v,
            Err(Error::BoundaryDegenerate(_)) => {
                if note.is_none() {
                    note = Some(
                        "constant-premium model sits on the safe-load boundary; \
                         psi_const = 1 (certain ruin) substituted"
                            .to_string(),
                    );
                }
                1.0
            }
            Err(e) => return Err(e),
        };
        rows.push(ComparisonRow { u, psi_linear, psi_constant, ratio: psi_linear / psi_constant });
    }
    Ok(Comparison { rows, note })
}

/// Least-squares slope of ln ψ against u — the empirical decay rate of a
/// sampled curve.  Needs at least two points with distinct reserves and
/// strictly positive values.
pub fn log_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("log-slope needs at least two points".into()));
    }
    if let Some((u, p)) = points.iter().find(|(_, p)| !(*p > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "log-slope needs strictly positive values, got {p} at u = {u}"
        )));
    }
    let n = points.len() as f64;
    let mean_u = points.iter().map(|(u, _)| u).sum::<f64>() / n;
    let mean_ln = points.iter().map(|(_, p)| p.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (u, p) in points {
        num += (u - mean_u) * (p.ln() - mean_ln);
        den += (u - mean_u) * (u - mean_u);
    }
    if den == 0.0 {
        return Err(Error::InvalidInput("log-slope needs distinct reserves".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_curve;
    use approx::assert_relative_eq;

    fn grid(hi: f64, step: f64) -> Vec<f64> {
        let n = (hi / step).round() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    }

    fn model(case: ModelCase, lambda: f64, mu: f64, p: PremiumFunction) -> ModelSpec {
        ModelSpec::new(case, lambda, mu, p).unwrap()
    }

    // The classical constant-premium ratio is exactly flat: fitted constant
    // λ/(cμ), spread at rounding level.
    #[test]
    fn expexp_constant_fit_recovers_classical_amplitude() {
        let m = model(ModelCase::ExpExp, 1.0, 2.0, PremiumFunction::Constant { c: 2.0 });
        let reference = exact_curve(&m, &grid(30.0, 0.5)).unwrap();
        let form = envelope(&m).unwrap();
        assert_eq!(form.class, EnvelopeClass::Constant);
        let fitted = fit_constant(form, &reference).unwrap();
        let c = fitted.fitted_constant.unwrap();
        assert_relative_eq!(c, 1.0 / (2.0 * 2.0), max_relative = 1e-9);
        assert!(fitted.spread.unwrap() < 0.01);
        // Auto window sits where the reference first drops below 1e-4.
        let (lo, hi) = fitted.fit_window;
        assert!(lo > 0.0 && (hi - 2.0 * lo).abs() < 1e-12);
    }

    // Linear-premium shape: e^{−μu}(c+εu)^{λ/ε−1} up to one constant.
    #[test]
    fn expexp_linear_envelope_has_the_closed_shape() {
        let (c, eps, lambda, mu) = (1.0, 0.5, 1.0, 2.0);
        let m = model(ModelCase::ExpExp, lambda, mu, PremiumFunction::Linear { c, eps });
        let form = envelope(&m).unwrap();
        assert_eq!(form.class, EnvelopeClass::Linear);
        let shape = |u: f64| (-mu * u).exp() * (c + eps * u).powf(lambda / eps - 1.0);
        let r0 = form.envelope_at(2.0).unwrap() / shape(2.0);
        for &u in &[5.0, 10.0, 20.0] {
            let r = form.envelope_at(u).unwrap() / shape(u);
            assert_relative_eq!(r, r0, max_relative = 1e-9);
        }
    }

    // Construction identity for the Erlang(2)-interarrival linear envelope.
    #[test]
    fn erlang2_linear_envelope_is_the_tail_integral() {
        let (c, eps, mu) = (1.0, 0.5, 2.0);
        let m = model(ModelCase::Erlang2Exp, 1.0, mu, PremiumFunction::Linear { c, eps });
        let form = envelope(&m).unwrap();
        for &u in &[1.0, 5.0, 10.0] {
            let direct = integrate_to_infinity(
                |y| (-mu * y).exp() * ((c + eps * y) / c).powi(-2),
                u,
                1e-12,
            )
            .unwrap()
            .value;
            assert_relative_eq!(form.envelope_at(u).unwrap(), direct, max_relative = 1e-8);
        }
        // Positive and decreasing where it matters.
        let e5 = form.envelope_at(5.0).unwrap();
        let e10 = form.envelope_at(10.0).unwrap();
        assert!(e5 > e10 && e10 > 0.0);
    }

    // Certain-ruin constants have no decaying special solution at all.
    #[test]
    fn unstable_regime_is_a_hypothesis_violation() {
        let m = model(ModelCase::Erlang2Exp, 1.0, 1.0, PremiumFunction::Constant { c: 0.2 });
        assert!(matches!(envelope(&m), Err(Error::HypothesisViolated(_))));
        // The classical case is caught by the eventual-decrease probes: an
        // unsafe constant makes the exponent grow.
        let m = model(ModelCase::ExpExp, 1.0, 2.0, PremiumFunction::Constant { c: 0.4 });
        assert!(matches!(envelope(&m), Err(Error::HypothesisViolated(_))));
    }

    // Full fit of the Erlang(2)-interarrival constant case: the envelope is
    // e^{ρ̂₁u}/|ρ̂₁|, so the fitted constant is weight·|ρ̂₁|.
    #[test]
    fn erlang2_constant_fit_matches_closed_form_amplitude() {
        let m = model(ModelCase::Erlang2Exp, 1.0, 2.0, PremiumFunction::Constant { c: 1.0 });
        let reference = exact_curve(&m, &grid(12.0, 0.25)).unwrap();
        let fitted = fit_constant(envelope(&m).unwrap(), &reference).unwrap();
        let rate = 3.0_f64.sqrt();
        let weight = 1.0 - rate / 2.0;
        assert_relative_eq!(fitted.fitted_constant.unwrap(), weight * rate, max_relative = 1e-6);
        assert!(fitted.spread.unwrap() < 1e-6);
    }

    // Linear Erlang(2)-interarrival fit on the window [20, 40] mean-claim
    // units (mean claim 1/μ = 1 here): spread below 5%.  The leading
    // correction to the tail shape scales with the Kummer-series constant
    // a(a−b+1), which is small for λ/ε = 1/2; steeper premium/claim mixes
    // need a deeper window for the same spread.
    #[test]
    fn erlang2_linear_fit_converges_on_deep_window() {
        let m = model(
            ModelCase::Erlang2Exp,
            1.0,
            1.0,
            PremiumFunction::Linear { c: 1.0, eps: 2.0 },
        );
        let reference = exact_curve(&m, &grid(40.0, 0.5)).unwrap();
        let mut form = envelope(&m).unwrap();
        form.fit_window = (20.0, 40.0);
        let fitted = fit_constant(form, &reference).unwrap();
        assert!(fitted.fitted_constant.unwrap() > 0.0);
        assert!(
            fitted.spread.unwrap() < 0.05,
            "spread {} should be below 5%",
            fitted.spread.unwrap()
        );
    }

    // An envelope equal to the reference fits constant 1 with zero spread.
    #[test]
    fn identical_envelope_fits_to_unity() {
        let m = model(ModelCase::ExpExp, 1.0, 2.0, PremiumFunction::Constant { c: 2.0 });
        let reference = exact_curve(&m, &grid(30.0, 0.5)).unwrap();
        let rate = 2.0 - 1.0 / 2.0;
        let form = AsymptoticForm {
            case: ModelCase::ExpExp,
            class: EnvelopeClass::Constant,
            envelope: Arc::new(move |u: f64| Ok(0.25 * (-rate * u).exp())),
            fitted_constant: None,
            fit_window: (0.0, 0.0),
            spread: None,
        };
        let fitted = fit_constant(form, &reference).unwrap();
        assert_relative_eq!(fitted.fitted_constant.unwrap(), 1.0, max_relative = 1e-10);
        assert!(fitted.spread.unwrap() < 1e-9);
    }

    // Moving the window deeper shrinks the residual spread.
    #[test]
    fn spread_shrinks_as_the_window_moves_right() {
        let m = model(
            ModelCase::Erlang2Exp,
            1.0,
            1.0,
            PremiumFunction::Linear { c: 1.0, eps: 2.0 },
        );
        let reference = exact_curve(&m, &grid(40.0, 0.5)).unwrap();
        let mut shallow = envelope(&m).unwrap();
        shallow.fit_window = (10.0, 20.0);
        let mut deep = envelope(&m).unwrap();
        deep.fit_window = (20.0, 40.0);
        let s1 = fit_constant(shallow, &reference).unwrap().spread.unwrap();
        let s2 = fit_constant(deep, &reference).unwrap().spread.unwrap();
        assert!(s2 < s1, "deep-window spread {s2} should beat shallow {s1}");
    }

    // Tail-regime dichotomy for Erlang(2) claims: one flat log-slope in the
    // certain-ruin regime, a genuinely varying one under net profit.
    #[test]
    fn experlang2_regime_dichotomy_in_term_count() {
        let slope = |form: &AsymptoticForm, u: f64| {
            (form.envelope_at(u + 0.5).unwrap().ln() - form.envelope_at(u).unwrap().ln()) / 0.5
        };
        // λ > μc/2: single exponential, identical slope everywhere.
        let one = model(ModelCase::ExpErlang2, 3.0, 1.0, PremiumFunction::Constant { c: 1.0 });
        let one_form = envelope(&one).unwrap();
        let r_fast = (2.0 - 3.0 + (9.0_f64 + 12.0).sqrt()) / 2.0;
        assert_relative_eq!(slope(&one_form, 0.0), -r_fast, max_relative = 1e-9);
        assert_relative_eq!(slope(&one_form, 10.0), -r_fast, max_relative = 1e-9);
        // λ < μc/2: mixture of two exponentials, slope drifts toward the
        // slow root.
        let two = model(ModelCase::ExpErlang2, 1.0, 1.0, PremiumFunction::Constant { c: 3.0 });
        let two_form = envelope(&two).unwrap();
        let s_early = slope(&two_form, 0.0);
        let s_late = slope(&two_form, 30.0);
        let r_slow = (2.0 * 3.0 - 1.0 - (1.0_f64 + 12.0).sqrt()) / 6.0;
        assert_relative_eq!(s_late, -r_slow, max_relative = 1e-6);
        // The fast component's weight is small, so the bend is mild — but a
        // single exponential would show none at all (the one-root branch
        // above is flat to 1e-9).
        assert!(
            (s_early - s_late).abs() > 0.02,
            "two-term mixture must bend: early {s_early}, late {s_late}"
        );
    }

    // The generic modulated-root integral and the closed linear envelope
    // describe the same tail: their ratio is flat within 5% at depth.
    #[test]
    fn wkb_and_closed_linear_envelopes_agree_at_depth() {
        let m = model(
            ModelCase::Erlang2Exp,
            1.0,
            1.0,
            PremiumFunction::Linear { c: 1.0, eps: 2.0 },
        );
        let wkb = erlang2_wkb_integral(&m).unwrap();
        let closed = erlang2_linear_closed(&m);
        let ratios: Vec<f64> = [30.0, 40.0, 50.0, 60.0]
            .iter()
            .map(|&u| wkb(u).unwrap() / closed(u).unwrap())
            .collect();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            (max - min) / mean < 0.05,
            "ratio drift {:.3}% exceeds 5% (ratios {ratios:?})",
            100.0 * (max - min) / mean
        );
    }

    // §-style comparison for the classical case: the log-ratio decays at
    // −λ/c plus a sublinear polynomial correction.
    #[test]
    fn expexp_comparison_log_ratio_slope() {
        let (c, eps, lambda, mu) = (1.0, 0.5, 1.0, 2.0);
        let us: Vec<f64> = (10..=20).map(|k| 2.0 * k as f64).collect();
        let cmp = compare_linear_vs_constant(ModelCase::ExpExp, c, eps, lambda, mu, &us).unwrap();
        assert!(cmp.note.is_none());
        let pts: Vec<(f64, f64)> = cmp.rows.iter().map(|r| (r.u, r.ratio)).collect();
        let slope = log_slope(&pts).unwrap();
        let shape = |u: f64| -(lambda / c) * u + (lambda / eps - 1.0) * (c + eps * u).ln();
        let expected = (shape(40.0) - shape(20.0)) / 20.0;
        assert!(
            (slope - expected).abs() < 5e-3,
            "log-ratio slope {slope} vs expected {expected}"
        );
        for w in cmp.rows.windows(2) {
            assert!(w[1].ratio < w[0].ratio, "ratio must decrease");
        }
    }

    #[test]
    fn erlang2_comparison_ratio_tends_to_zero() {
        let us: Vec<f64> = (0..=6).map(|k| 5.0 * k as f64).collect();
        let cmp =
            compare_linear_vs_constant(ModelCase::Erlang2Exp, 1.0, 0.5, 1.0, 2.0, &us).unwrap();
        let rows = &cmp.rows;
        for w in rows.windows(2).skip(1) {
            assert!(w[1].ratio < w[0].ratio, "tail must be monotone");
        }
        assert!(rows.last().unwrap().ratio < 1e-4 * rows[1].ratio);
    }

    #[test]
    fn experlang2_comparison_ratio_limit_zero() {
        let us: Vec<f64> = (0..=6).map(|k| 5.0 * k as f64).collect();
        let cmp =
            compare_linear_vs_constant(ModelCase::ExpErlang2, 3.0, 1.0, 1.0, 1.0, &us).unwrap();
        let rows = &cmp.rows;
        for w in rows.windows(2).skip(1) {
            assert!(w[1].ratio < w[0].ratio, "tail must be monotone");
        }
        assert!(rows.last().unwrap().ratio < 1e-3 * rows[1].ratio);
    }

    // Safe-load boundary: ψ_const ≡ 1 substituted, and said so.
    #[test]
    fn boundary_constant_model_substitutes_certain_ruin() {
        let us = [0.0, 1.0, 2.0, 4.0];
        let cmp =
            compare_linear_vs_constant(ModelCase::ExpErlang2, 1.0, 0.5, 1.0, 2.0, &us).unwrap();
        assert!(cmp.note.is_some());
        for r in &cmp.rows {
            assert_eq!(r.psi_constant, 1.0);
            assert_eq!(r.ratio, r.psi_linear);
        }
    }

    #[test]
    fn strictly_unsafe_constant_model_propagates_safe_load() {
        let us = [0.0, 1.0];
        assert!(matches!(
            compare_linear_vs_constant(ModelCase::ExpErlang2, 0.5, 0.5, 2.0, 1.0, &us),
            Err(Error::SafeLoad(_))
        ));
    }

    #[test]
    fn log_slope_recovers_exact_exponential_rate() {
        let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 3.0 * (-0.7 * k as f64).exp())).collect();
        assert_relative_eq!(log_slope(&pts).unwrap(), -0.7, max_relative = 1e-12);
        assert!(log_slope(&pts[..1]).is_err());
        let bad = [(0.0, 1.0), (1.0, 0.0)];
        assert!(log_slope(&bad).is_err());
    }

    #[test]
    fn psi_at_requires_a_fitted_constant() {
        let m = model(ModelCase::ExpExp, 1.0, 2.0, PremiumFunction::Constant { c: 2.0 });
        let form = envelope(&m).unwrap();
        assert!(form.psi_at(1.0).is_err());
        let reference = exact_curve(&m, &grid(30.0, 0.5)).unwrap();
        let fitted = fit_constant(form, &reference).unwrap();
        let psi = fitted.psi_at(3.0).unwrap();
        let expected = 0.25 * (-1.5_f64 * 3.0).exp();
        assert_relative_eq!(psi, expected, max_relative = 1e-8);
    }

    // A window straddling the pre-asymptotic bend must be rejected.
    #[test]
    fn drifting_ratio_is_fit_non_convergent() {
        let m = model(
            ModelCase::ExpErlang2,
            1.0,
            1.0,
            PremiumFunction::Constant { c: 3.0 },
        );
        let reference = exact_curve(&m, &grid(30.0, 0.5)).unwrap();
        // Single-exponential envelope at the *fast* rate only: wrong shape
        // at depth, so the ratio drifts across any window.
        let r_fast = (2.0 * 3.0 - 1.0 + (1.0_f64 + 12.0).sqrt()) / 6.0;
        let mut form = AsymptoticForm {
            case: ModelCase::ExpErlang2,
            class: EnvelopeClass::Constant,
            envelope: Arc::new(move |u: f64| Ok((-r_fast * u).exp())),
            fitted_constant: None,
            fit_window: (5.0, 15.0),
            spread: None,
        };
        assert!(matches!(
            fit_constant(form.clone(), &reference),
            Err(Error::FitNonConvergent(_))
        ));
        // And the reference must reach the window at all.
        form.fit_window = (20.0, 60.0);
        assert!(matches!(fit_constant(form, &reference), Err(Error::InvalidInput(_))));
    }
}
