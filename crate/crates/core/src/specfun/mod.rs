//! Special functions and adaptive quadrature.
//!
//! Everything downstream — closed-form ruin curves, WKB envelopes, the BVP
//! calibration — reduces to the handful of classical functions implemented
//! here: the upper incomplete gamma, Kummer's M and U, modified Bessel I and
//! K, and one adaptive Gauss–Kronrod integrator for finite and semi-infinite
//! ranges.  Each function switches between a small-argument representation
//! (series, continued fraction, or integral) and the handbook asymptotic
//! series, with the switch placed where the regimes agree to ~1e−9.
//!
//! All routines are pure `f64` computations with no shared mutable state
//! (the cumulative-integral cache synchronizes internally) and are safe to
//! call from any thread.

mod bessel;
mod gamma;
mod kummer;
mod quad;

pub use bessel::{bessel_i, bessel_i_scaled, bessel_k, bessel_k_scaled};
pub use gamma::{gamma, ln_gamma, ln_upper_incomplete_gamma, upper_incomplete_gamma};
pub use kummer::{kummer_m, kummer_u};
pub use quad::{integrate, integrate_to_infinity, CumulativeIntegral, QuadratureResult};
