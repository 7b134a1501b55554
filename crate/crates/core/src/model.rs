//! Risk-model configuration: premium functions with analytic derivatives,
//! the three distribution cases, tail-class detection, and the safe-load
//! (net-profit) check.
//!
//! A model couples an interarrival/claim-size case with a premium function
//! `p(u)` that may depend on the current reserve.  Premium functions carry
//! their first two derivatives analytically because the characteristic ODEs
//! downstream use `p''` directly; finite differencing there would pollute the
//! coefficients.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Probe grid for numeric tail classification: u ∈ {10⁰, 10¹, …, 10⁶},
/// spanning the regimes the asymptotic results distinguish.
const PROBE_GRID: [f64; 7] = [1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6];

/// Equality tolerance for the safe-load boundary.  The asymptotic theory is
/// silent exactly on the boundary, so landing within this band is a hard
/// error rather than a coin flip.
const BOUNDARY_TOL: f64 = 1e-12;

/// Tail class of a premium function.
///
/// `P1` premiums level off (`p(∞)` finite, `p'(u) = O(1/u²)`); `P2` premiums
/// grow without bound (polynomials with positive coefficients); `Constant`
/// is its own class because the classical closed forms apply only there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PremiumClass {
    Constant,
    P1,
    P2,
}

impl fmt::Display for PremiumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PremiumClass::Constant => write!(f, "constant"),
            PremiumClass::P1 => write!(f, "P1"),
            PremiumClass::P2 => write!(f, "P2"),
        }
    }
}

/// Signature for user-supplied premium evaluators and derivatives.
pub type PremiumFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A surplus-dependent premium rate `p(u)` together with its derivatives.
///
/// The built-in families cover everything the solvers have closed-form or
/// semi-closed-form treatment for; [`PremiumFunction::Custom`] admits any
/// smooth premium at the price of supplying `p'` and `p''` analytically and
/// declaring the intended tail class (which is then audited numerically).
#[derive(Clone)]
pub enum PremiumFunction {
    /// `p(u) = c`.
    Constant { c: f64 },
    /// `p(u) = c + εu`.
    Linear { c: f64, eps: f64 },
    /// `p(u) = c + Σᵢ εᵢ uⁱ` with every `εᵢ > 0`; the unbounded polynomial
    /// family (class P2).  `eps[k]` multiplies `u^(k+1)`.
    Polynomial { c: f64, eps: Vec<f64> },
    /// `p(u) = c + a/(1+u)`: levels off at `c` with `p'(u) = O(1/u²)`
    /// (class P1).
    BoundedRational { c: f64, a: f64 },
    /// User-supplied premium.  `declared` is the claimed tail class and must
    /// survive the numeric probes in [`classify_premium`].
    Custom {
        p: PremiumFn,
        dp: PremiumFn,
        d2p: PremiumFn,
        declared: PremiumClass,
    },
}

impl fmt::Debug for PremiumFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PremiumFunction::Constant { c } => write!(f, "Constant {{ c: {c} }}"),
            PremiumFunction::Linear { c, eps } => write!(f, "Linear {{ c: {c}, eps: {eps} }}"),
            PremiumFunction::Polynomial { c, eps } => {
                write!(f, "Polynomial {{ c: {c}, eps: {eps:?} }}")
            }
            PremiumFunction::BoundedRational { c, a } => {
                write!(f, "BoundedRational {{ c: {c}, a: {a} }}")
            }
            PremiumFunction::Custom { declared, .. } => {
                write!(f, "Custom {{ declared: {declared:?}, .. }}")
            }
        }
    }
}

impl PremiumFunction {
    /// Premium rate at reserve `u`.
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            PremiumFunction::Constant { c } => *c,
            PremiumFunction::Linear { c, eps } => c + eps * u,
            PremiumFunction::Polynomial { c, eps } => {
                let mut acc = 0.0;
                for &e in eps.iter().rev() {
                    acc = u * (e + acc);
                }
                c + acc
            }
            PremiumFunction::BoundedRational { c, a } => c + a / (1.0 + u),
            PremiumFunction::Custom { p, .. } => p(u),
        }
    }

    /// First derivative `p'(u)`.
    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            PremiumFunction::Constant { .. } => 0.0,
            PremiumFunction::Linear { eps, .. } => *eps,
            PremiumFunction::Polynomial { eps, .. } => {
                let mut acc = 0.0;
                for (i, &e) in eps.iter().enumerate().rev() {
                    let k = (i + 1) as f64;
                    acc = acc * u + k * e;
                }
                acc
            }
            PremiumFunction::BoundedRational { a, .. } => {
                let s = 1.0 + u;
                -a / (s * s)
            }
            PremiumFunction::Custom { dp, .. } => dp(u),
        }
    }

    /// Second derivative `p''(u)`.
    pub fn deriv2(&self, u: f64) -> f64 {
        match self {
            PremiumFunction::Constant { .. } | PremiumFunction::Linear { .. } => 0.0,
            PremiumFunction::Polynomial { eps, .. } => {
                let mut acc = 0.0;
                for (i, &e) in eps.iter().enumerate().rev() {
                    let k = (i + 1) as f64;
                    if i >= 1 {
                        acc = acc * u + k * (k - 1.0) * e;
                    }
                }
                acc
            }
            PremiumFunction::BoundedRational { a, .. } => {
                let s = 1.0 + u;
                2.0 * a / (s * s * s)
            }
            PremiumFunction::Custom { d2p, .. } => d2p(u),
        }
    }

    /// Third derivative `p'''(u)` when the family provides it analytically;
    /// `None` for custom premiums (callers fall back to finite differences).
    pub fn deriv3(&self, u: f64) -> Option<f64> {
        match self {
            PremiumFunction::Constant { .. } | PremiumFunction::Linear { .. } => Some(0.0),
            PremiumFunction::Polynomial { eps, .. } => {
                let mut acc = 0.0;
                for (i, &e) in eps.iter().enumerate().rev() {
                    let k = (i + 1) as f64;
                    if i >= 2 {
                        acc = acc * u + k * (k - 1.0) * (k - 2.0) * e;
                    }
                }
                Some(acc)
            }
            PremiumFunction::BoundedRational { a, .. } => {
                let s = 1.0 + u;
                Some(-6.0 * a / (s * s * s * s))
            }
            PremiumFunction::Custom { .. } => None,
        }
    }

    /// Exact `p(∞)` for the families that level off; `None` when the premium
    /// is unbounded or the limit is not known analytically.
    pub fn level_at_infinity(&self) -> Option<f64> {
        match self {
            PremiumFunction::Constant { c } | PremiumFunction::BoundedRational { c, .. } => {
                Some(*c)
            }
            _ => None,
        }
    }

    /// Validate the parameters and (for custom premiums) probe positivity.
    pub fn validate(&self) -> Result<()> {
        match self {
            PremiumFunction::Constant { c } => {
                if !(*c > 0.0) {
                    return Err(Error::InvalidInput(format!("premium level c must be > 0, got {c}")));
                }
            }
            PremiumFunction::Linear { c, eps } => {
                if !(*c > 0.0) || !(*eps > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "linear premium needs c > 0 and eps > 0, got c={c}, eps={eps}"
                    )));
                }
            }
            PremiumFunction::Polynomial { c, eps } => {
                if !(*c > 0.0) {
                    return Err(Error::InvalidInput(format!("premium level c must be > 0, got {c}")));
                }
                if eps.is_empty() {
                    return Err(Error::InvalidInput(
                        "polynomial premium needs at least one power term; use a constant premium instead".into(),
                    ));
                }
                if let Some(bad) = eps.iter().find(|e| !(**e > 0.0)) {
                    return Err(Error::InvalidInput(format!(
                        "polynomial premium coefficients must all be > 0, got {bad}"
                    )));
                }
            }
            PremiumFunction::BoundedRational { c, a } => {
                if !(*c > 0.0) || !(*a > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "bounded-rational premium needs c > 0 and a > 0, got c={c}, a={a}"
                    )));
                }
            }
            PremiumFunction::Custom { p, dp, d2p, declared } => {
                if *declared == PremiumClass::Constant {
                    return Err(Error::InvalidInput(
                        "custom premiums declare P1 or P2; use the Constant family for constants".into(),
                    ));
                }
                for &u in std::iter::once(&0.0).chain(PROBE_GRID.iter()) {
                    let (v, d1, d2) = (p(u), dp(u), d2p(u));
                    if !(v > 0.0) || !v.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "custom premium must be positive and finite; p({u}) = {v}"
                        )));
                    }
                    if !d1.is_finite() || !d2.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "custom premium derivatives must be finite at u = {u}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Tail class of a premium function.
///
/// Built-in families classify by construction.  Custom premiums are audited
/// against the declared class on the probe grid: growth `p(10⁶)/p(10³) > 10`
/// marks a P2 candidate, while `u²·p'(u)` staying bounded across the grid
/// marks a P1 candidate.  A declaration the probes contradict is an error —
/// the solver families differ qualitatively between the classes, so guessing
/// would silently produce the wrong asymptotics.
pub fn classify_premium(p: &PremiumFunction) -> Result<PremiumClass> {
    match p {
        PremiumFunction::Constant { .. } => Ok(PremiumClass::Constant),
        PremiumFunction::Linear { .. } | PremiumFunction::Polynomial { .. } => Ok(PremiumClass::P2),
        PremiumFunction::BoundedRational { .. } => Ok(PremiumClass::P1),
        PremiumFunction::Custom { declared, .. } => {
            let growth = p.eval(1e6) / p.eval(1e3);
            let p2_candidate = growth > 10.0;
            // u²·p'(u) bounded across the grid: allow an order of magnitude of
            // slack over the early-grid scale so preasymptotic wiggle does not
            // misfire, but catch anything that keeps growing (for p' ~ 1/u the
            // product grows by 10⁶ across the grid).
            let scaled: Vec<f64> = PROBE_GRID.iter().map(|&u| (u * u * p.deriv(u)).abs()).collect();
            let head = scaled[..3].iter().cloned().fold(0.0f64, f64::max);
            let tail = scaled[3..].iter().cloned().fold(0.0f64, f64::max);
            let p1_candidate = tail <= 10.0 * head.max(f64::MIN_POSITIVE) && !p2_candidate;
            match declared {
                PremiumClass::P2 if p2_candidate => Ok(PremiumClass::P2),
                PremiumClass::P1 if p1_candidate => Ok(PremiumClass::P1),
                _ => Err(Error::AmbiguousClass(format!(
                    "declared {declared} but probes say growth p(1e6)/p(1e3) = {growth:.3e}, \
                     max u²|p'| = {:.3e} (early) vs {:.3e} (late)",
                    head, tail
                ))),
            }
        }
    }
}

/// Which interarrival/claim-size pair the model uses.
///
/// The second component names the claim-size law: `ExpExp` is the classical
/// Poisson/exponential model, `Erlang2Exp` has Erlang(2, λ) interarrival
/// times with exponential claims, and `ExpErlang2` has Poisson arrivals with
/// Erlang(2, μ) claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelCase {
    ExpExp,
    Erlang2Exp,
    ExpErlang2,
}

impl fmt::Display for ModelCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelCase::ExpExp => write!(f, "exp-exp"),
            ModelCase::Erlang2Exp => write!(f, "erlang2-exp"),
            ModelCase::ExpErlang2 => write!(f, "exp-erlang2"),
        }
    }
}

/// A fully specified risk model: distribution case, rate parameters, premium.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub case: ModelCase,
    /// Interarrival rate parameter (Erlang(2, λ) shape-2 rate in the
    /// `Erlang2Exp` case, exponential rate otherwise).
    pub lambda: f64,
    /// Claim-size rate parameter (Erlang(2, μ) shape-2 rate in the
    /// `ExpErlang2` case, exponential rate otherwise).
    pub mu: f64,
    pub premium: PremiumFunction,
}

impl ModelSpec {
    /// Build and validate a model specification.
    pub fn new(case: ModelCase, lambda: f64, mu: f64, premium: PremiumFunction) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be > 0, got {lambda}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidInput(format!("mu must be > 0, got {mu}")));
        }
        premium.validate()?;
        Ok(ModelSpec { case, lambda, mu, premium })
    }

    /// Tail class of this model's premium.
    pub fn premium_class(&self) -> Result<PremiumClass> {
        classify_premium(&self.premium)
    }

    /// Mean claim size for the model's claim law.
    pub fn claim_mean(&self) -> f64 {
        match self.case {
            ModelCase::ExpExp | ModelCase::Erlang2Exp => 1.0 / self.mu,
            ModelCase::ExpErlang2 => 2.0 / self.mu,
        }
    }

    /// Mean interarrival time for the model's arrival law.
    pub fn interarrival_mean(&self) -> f64 {
        match self.case {
            ModelCase::ExpExp | ModelCase::ExpErlang2 => 1.0 / self.lambda,
            ModelCase::Erlang2Exp => 2.0 / self.lambda,
        }
    }
}

/// Which tail shape the `ExpErlang2` asymptotics take at a given premium
/// level: one decaying exponential (`λ > μc/2`, ruin is certain) or a
/// two-exponential mixture (`λ < μc/2`, net profit holds).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailRegime {
    OneRoot,
    TwoRoot,
}

/// Outcome of the safe-load check.
#[derive(Clone, Copy, Debug)]
pub struct SafeLoadReport {
    /// Whether the net-profit condition holds at the premium's limiting level.
    pub satisfied: bool,
    /// Signed distance of the inequality; positive iff satisfied.  `+∞` for
    /// P2 premiums, where drift eventually dominates any claim intensity.
    pub margin: f64,
    /// `ExpErlang2` only: which asymptotic tail regime the parameters select.
    pub regime: Option<TailRegime>,
}

/// Check the net-profit (safe-load) condition at the premium's level at
/// infinity.
///
/// The conditions are stated for a constant premium level `c`; a P1 premium
/// is checked at `c = p(∞)` and a P2 premium always passes.  Per case:
/// `ExpExp` needs `λ/(cμ) < 1`, `Erlang2Exp` needs `2c/λ > 1/μ`, and
/// `ExpErlang2` reports which of `λ ≷ μc/2` holds since that selects between
/// the one- and two-exponential tail asymptotics.
///
/// # Errors
/// [`Error::BoundaryDegenerate`] when the inequality is an equality within
/// 1e−12: the asymptotic results exclude the boundary, so no answer would be
/// trustworthy.  Custom P1 premiums with no analytic limit are checked at
/// `p(10⁶)`.
pub fn safe_load_check(m: &ModelSpec) -> Result<SafeLoadReport> {
    let class = classify_premium(&m.premium)?;
    if class == PremiumClass::P2 {
        return Ok(SafeLoadReport {
            satisfied: true,
            margin: f64::INFINITY,
            regime: None,
        });
    }
    let c = m.premium.level_at_infinity().unwrap_or_else(|| m.premium.eval(1e6));
    let (margin, regime) = match m.case {
        ModelCase::ExpExp => (1.0 - m.lambda / (c * m.mu), None),
        ModelCase::Erlang2Exp => (2.0 * c / m.lambda - 1.0 / m.mu, None),
        ModelCase::ExpErlang2 => {
            let margin = m.mu * c / 2.0 - m.lambda;
            let regime = if margin > 0.0 { TailRegime::TwoRoot } else { TailRegime::OneRoot };
            (margin, Some(regime))
        }
    };
    if margin.abs() <= BOUNDARY_TOL {
        return Err(Error::BoundaryDegenerate(format!(
            "safe-load margin {margin:.3e} sits on the boundary; the asymptotic \
             theory excludes equality"
        )));
    }
    Ok(SafeLoadReport { satisfied: margin > 0.0, margin, regime })
}
