//! Characteristic second-order ODEs for the ruin-probability derivative
//! h = ψ′, their root functions, correction terms, and stable-solution
//! integrands.
//!
//! For Erlang(2, λ) interarrival times with exponential claims, eliminating
//! the renewal convolution from the integro-differential equation for ψ (by
//! applying d/du + μ to it) leaves a third-order equation whose ψ-free part
//! is a second-order ODE in h:
//!
//! ```text
//! h'' + q₁(u) h' + q₀(u) h = 0,
//! q₁ = μ + (3p' − 2λ)/p,
//! q₀ = ((λ − p')² + p(p'' + μp' − 2λμ))/p².
//! ```
//!
//! The 3p′ term is where care is needed: the elimination differentiates
//! p²ψ'' + (pp' − 2λp)ψ', and the product rule on the variable coefficients
//! feeds an extra p p′ h′ into the result.  For exponential interarrivals
//! with Erlang(2, μ) claims the same elimination (applying (d/du + μ)²)
//! gives
//!
//! ```text
//! h'' + q̃₁(u) h' + q̃₀(u) h = 0,
//! q̃₁ = (2p' + 2μp − λ)/p,
//! q̃₀ = (p'' + 2μp' + μ²p − 2μλ)/p.
//! ```
//!
//! Large-reserve asymptotics come from the frozen-coefficient quadratic
//! ρ² + q₁ρ + q₀ = 0: the root functions ρᵢ(u), their first-order corrections
//! ρᵢ⁽¹⁾ = −ρᵢ′/(2ρᵢ + q₁), and the resulting stable solutions
//! exp{∫₀^y (ρᵢ + ρᵢ⁽¹⁾)}.

use crate::error::{Error, Result};
use crate::model::{ModelCase, ModelSpec, PremiumFunction};
use crate::specfun::CumulativeIntegral;

/// Which characteristic root a computation refers to, under the fixed
/// ordering ρ₁(u) ≤ ρ₂(u).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootIndex {
    One,
    Two,
}

/// Coefficients q₁(u), q₀(u) of the second-order ODE in h = ψ′ for one of
/// the two Erlang cases, bound to a concrete model.
#[derive(Clone, Debug)]
pub struct OdeCoefficients {
    case: ModelCase,
    lambda: f64,
    mu: f64,
    premium: PremiumFunction,
}

/// Build the h-ODE coefficients for `m`.
///
/// # Errors
/// Unsupported for the exponential/exponential case, whose ruin probability
/// satisfies a first-order equation handled in closed form by the `exact`
/// module.
pub fn build_coefficients(m: &ModelSpec) -> Result<OdeCoefficients> {
    if m.case == ModelCase::ExpExp {
        return Err(Error::Unsupported(
            "the exp/exp case reduces to a first-order equation; use the exact solvers".into(),
        ));
    }
    Ok(OdeCoefficients {
        case: m.case,
        lambda: m.lambda,
        mu: m.mu,
        premium: m.premium.clone(),
    })
}

impl OdeCoefficients {
    pub fn case(&self) -> ModelCase {
        self.case
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn premium(&self) -> &PremiumFunction {
        &self.premium
    }

    /// Whether the premium is constant, making q₁, q₀ constants in u.
    pub fn is_constant_premium(&self) -> bool {
        matches!(self.premium, PremiumFunction::Constant { .. })
    }

    /// Coefficient of h′.
    pub fn q1(&self, u: f64) -> f64 {
        let p = self.premium.eval(u);
        let dp = self.premium.deriv(u);
        match self.case {
            ModelCase::Erlang2Exp => self.mu + (3.0 * dp - 2.0 * self.lambda) / p,
            ModelCase::ExpErlang2 => (2.0 * dp + 2.0 * self.mu * p - self.lambda) / p,
            ModelCase::ExpExp => unreachable!("rejected in build_coefficients"),
        }
    }

    /// Coefficient of h.
    pub fn q0(&self, u: f64) -> f64 {
        let p = self.premium.eval(u);
        let dp = self.premium.deriv(u);
        let d2p = self.premium.deriv2(u);
        let (lambda, mu) = (self.lambda, self.mu);
        match self.case {
            ModelCase::Erlang2Exp => {
                let lm = lambda - dp;
                (lm * lm + p * (d2p + mu * dp - 2.0 * lambda * mu)) / (p * p)
            }
            ModelCase::ExpErlang2 => (d2p + 2.0 * mu * dp + mu * mu * p - 2.0 * mu * lambda) / p,
            ModelCase::ExpExp => unreachable!("rejected in build_coefficients"),
        }
    }

    /// Analytic q₁′(u); `None` when the premium lacks an analytic p'''.
    fn dq1(&self, u: f64) -> Option<f64> {
        let p = self.premium.eval(u);
        let dp = self.premium.deriv(u);
        let d2p = self.premium.deriv2(u);
        match self.case {
            ModelCase::Erlang2Exp => {
                Some(3.0 * d2p / p - (3.0 * dp - 2.0 * self.lambda) * dp / (p * p))
            }
            ModelCase::ExpErlang2 => {
                let num = 2.0 * dp + 2.0 * self.mu * p - self.lambda;
                Some((2.0 * d2p + 2.0 * self.mu * dp) / p - num * dp / (p * p))
            }
            ModelCase::ExpExp => unreachable!(),
        }
    }

    /// Analytic q₀′(u); `None` when the premium lacks an analytic p'''.
    fn dq0(&self, u: f64) -> Option<f64> {
        let d3p = self.premium.deriv3(u)?;
        let p = self.premium.eval(u);
        let dp = self.premium.deriv(u);
        let d2p = self.premium.deriv2(u);
        let (lambda, mu) = (self.lambda, self.mu);
        match self.case {
            ModelCase::Erlang2Exp => {
                let n = {
                    let lm = lambda - dp;
                    lm * lm + p * (d2p + mu * dp - 2.0 * lambda * mu)
                };
                let n1 = -2.0 * (lambda - dp) * d2p
                    + dp * (d2p + mu * dp - 2.0 * lambda * mu)
                    + p * (d3p + mu * d2p);
                Some(n1 / (p * p) - 2.0 * n * dp / (p * p * p))
            }
            ModelCase::ExpErlang2 => {
                let m = d2p + 2.0 * mu * dp + mu * mu * p - 2.0 * mu * lambda;
                Some((d3p + 2.0 * mu * d2p + mu * mu * dp) / p - m * dp / (p * p))
            }
            ModelCase::ExpExp => unreachable!(),
        }
    }
}

/// Roots ρ₁(u) ≤ ρ₂(u) of ρ² + q₁(u)ρ + q₀(u) = 0.
///
/// The larger-magnitude root is computed from the quadratic formula and the
/// other from the product ρ₁ρ₂ = q₀, avoiding cancellation.
///
/// # Errors
/// [`Error::ComplexRoots`] when the discriminant q₁² − 4q₀ is negative: the
/// asymptotic construction assumes real, distinct characteristic roots, so a
/// complex pair is reported rather than silently worked around.
pub fn char_roots(co: &OdeCoefficients, u: f64) -> Result<(f64, f64)> {
    let q1 = co.q1(u);
    let q0 = co.q0(u);
    let disc = q1 * q1 - 4.0 * q0;
    if disc < 0.0 {
        return Err(Error::ComplexRoots(format!(
            "discriminant q1² − 4q0 = {disc:.6e} < 0 at u = {u:.6e} (q1 = {q1:.6e}, q0 = {q0:.6e})"
        )));
    }
    let sq = disc.sqrt();
    if q0 == 0.0 {
        // Factored case ρ(ρ + q₁) = 0.
        let other = -q1;
        return Ok((other.min(0.0), other.max(0.0)));
    }
    // Well-conditioned root first: sign(q₁) picks the additive branch.
    let big = if q1 >= 0.0 { -(q1 + sq) / 2.0 } else { (-q1 + sq) / 2.0 };
    let small = q0 / big;
    Ok((big.min(small), big.max(small)))
}

/// ρᵢ′(u): analytic when the premium supplies p''' (built-in families),
/// otherwise a central finite difference with step max(1e−6·u, 1e−8).
pub fn root_derivative(co: &OdeCoefficients, idx: RootIndex, u: f64) -> Result<f64> {
    if co.is_constant_premium() {
        return Ok(0.0);
    }
    if let (Some(dq1), Some(dq0)) = (co.dq1(u), co.dq0(u)) {
        let q1 = co.q1(u);
        let q0 = co.q0(u);
        let disc = q1 * q1 - 4.0 * q0;
        if disc < 0.0 {
            return Err(Error::ComplexRoots(format!(
                "discriminant {disc:.6e} < 0 at u = {u:.6e}"
            )));
        }
        let sq = disc.sqrt();
        if sq < 1e-12 {
            return Err(Error::DegenerateRoot(format!(
                "repeated characteristic root at u = {u:.6e}; the correction term is undefined"
            )));
        }
        let dsq = (q1 * dq1 - 2.0 * dq0) / sq;
        let d = match idx {
            RootIndex::One => 0.5 * (-dq1 - dsq),
            RootIndex::Two => 0.5 * (-dq1 + dsq),
        };
        return Ok(d);
    }
    let h = (1e-6 * u.abs()).max(1e-8);
    let pick = |r: (f64, f64)| match idx {
        RootIndex::One => r.0,
        RootIndex::Two => r.1,
    };
    let hi = pick(char_roots(co, u + h)?);
    let lo = pick(char_roots(co, u - h)?);
    Ok((hi - lo) / (2.0 * h))
}

/// First-order root correction ρᵢ⁽¹⁾(u) = −ρᵢ′(u)/(2ρᵢ(u) + q₁(u)).
///
/// Zero for constant premiums (the roots do not move).
///
/// # Errors
/// [`Error::DegenerateRoot`] when |2ρᵢ + q₁| < 1e−12 (coalescing roots);
/// propagates [`Error::ComplexRoots`].
pub fn root_correction(co: &OdeCoefficients, idx: RootIndex, u: f64) -> Result<f64> {
    if co.is_constant_premium() {
        return Ok(0.0);
    }
    let (r1, r2) = char_roots(co, u)?;
    let rho = match idx {
        RootIndex::One => r1,
        RootIndex::Two => r2,
    };
    let denom = 2.0 * rho + co.q1(u);
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateRoot(format!(
            "|2ρ + q1| = {:.3e} at u = {u:.6e}; roots coalesce and the correction blows up",
            denom.abs()
        )));
    }
    Ok(-root_derivative(co, idx, u)? / denom)
}

enum IntegrandKind {
    /// Constant premium: the exponent is just ρ̂ᵢ·y.
    ConstantRate(f64),
    /// General premium: cached cumulative integral of ρᵢ + ρᵢ⁽¹⁾.
    Cumulative(CumulativeIntegral<Box<dyn Fn(f64) -> f64 + Send + Sync>>),
}

/// The stable-solution integrand y ↦ exp{∫₀^y (ρᵢ(z) + ρᵢ⁽¹⁾(z)) dz}.
///
/// Evaluations share a cumulative quadrature cache, so sweeping y upward
/// costs one pass over the inner integrand rather than one integral per
/// point.
pub struct StableIntegrand {
    kind: IntegrandKind,
}

/// Build the stable-solution integrand for the given root, with inner
/// quadrature tolerance `tol`.
///
/// # Errors
/// Complex-root and degenerate-root conditions detected at the probe points
/// u ∈ {0, 1, 10} surface immediately; conditions appearing elsewhere
/// surface as domain errors from the quadrature when [`StableIntegrand::eval`]
/// crosses them.
pub fn stable_integrand(
    co: &OdeCoefficients,
    idx: RootIndex,
    tol: f64,
) -> Result<StableIntegrand> {
    if co.is_constant_premium() {
        let (r1, r2) = char_roots(co, 0.0)?;
        let rate = match idx {
            RootIndex::One => r1,
            RootIndex::Two => r2,
        };
        return Ok(StableIntegrand { kind: IntegrandKind::ConstantRate(rate) });
    }
    for probe in [0.0, 1.0, 10.0] {
        char_roots(co, probe)?;
        root_correction(co, idx, probe)?;
    }
    let co = co.clone();
    let inner: Box<dyn Fn(f64) -> f64 + Send + Sync> = Box::new(move |z: f64| {
        let rho = match char_roots(&co, z) {
            Ok((r1, r2)) => match idx {
                RootIndex::One => r1,
                RootIndex::Two => r2,
            },
            Err(_) => return f64::NAN,
        };
        match root_correction(&co, idx, z) {
            Ok(c) => rho + c,
            Err(_) => f64::NAN,
        }
    });
    Ok(StableIntegrand { kind: IntegrandKind::Cumulative(CumulativeIntegral::new(inner, 0.0, tol)) })
}

impl StableIntegrand {
    /// ln of the integrand at `y`, i.e. ∫₀^y (ρᵢ + ρᵢ⁽¹⁾).
    pub fn ln_eval(&self, y: f64) -> Result<f64> {
        match &self.kind {
            IntegrandKind::ConstantRate(rate) => Ok(rate * y),
            IntegrandKind::Cumulative(cum) => cum.eval(y),
        }
    }

    /// The integrand value exp{∫₀^y (ρᵢ + ρᵢ⁽¹⁾)}; positive by construction.
    pub fn eval(&self, y: f64) -> Result<f64> {
        Ok(self.ln_eval(y)?.exp())
    }
}
