//! Error taxonomy shared by every module.
//!
//! Numerical failures are reported, never papered over: a divergent
//! normalizing integral, a negative discriminant, or a degenerate safe-load
//! boundary each get their own variant so callers (and the CLI exit-code
//! mapping) can tell configuration mistakes from genuine numerical trouble.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed parameters or configuration (CLI exit code 2).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature exhausted its budget above tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    /// A normalizing integral has no finite value (net-profit violation).
    #[error("integral diverges: {0}")]
    Divergence(String),

    /// Safe-load (net profit) condition violated.
    #[error("safe-load condition violated: {0}")]
    SafeLoad(String),

    /// Parameters sit on an excluded equality boundary (within 1e-12).
    #[error("degenerate parameter boundary: {0}")]
    BoundaryDegenerate(String),

    /// Characteristic discriminant negative; asymptotic theory inapplicable.
    #[error("complex characteristic roots: {0}")]
    ComplexRoots(String),

    /// Double root: the WKB correction term is undefined.
    #[error("degenerate characteristic root: {0}")]
    DegenerateRoot(String),

    /// Numerical probes contradict a premium's declared class.
    #[error("premium classification ambiguous: {0}")]
    AmbiguousClass(String),

    /// Model outside the hypotheses of the requested asymptotic theorem.
    #[error("asymptotic hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// Amplitude calibration left an integro-differential residual above tolerance.
    #[error("calibration failed: {0}")]
    Calibration(String),

    /// BVP truncation domain too short for the requested tolerance.
    #[error("truncation too small: {0}")]
    Truncation(String),

    /// ODE step-size control underflowed.
    #[error("step size underflow (stiffness): {0}")]
    Stiffness(String),

    /// Asymptotic-constant fit rejected: the ratio is not yet flat.
    #[error("fit did not converge: {0}")]
    FitNonConvergent(String),

    /// Operation not defined for this model case.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// Internal solver-health assertion tripped (please report).
    #[error("internal solver error: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for usage/config problems,
    /// 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
