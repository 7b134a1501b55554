//! Ruin probabilities for renewal risk models with surplus-dependent premiums.
//!
//! The surplus process grows at rate p(U(t)) between claims and drops by a
//! random claim amount at each renewal epoch; ψ(u) is the probability that
//! it ever goes negative starting from reserve u.  Three model cases are
//! covered, named by their interarrival/claim distributions:
//!
//! * `ExpExp` — Exp(λ) arrivals, Exp(μ) claims (the classical setting);
//! * `Erlang2Exp` — Erlang(2, λ) arrivals, Exp(μ) claims;
//! * `ExpErlang2` — Exp(λ) arrivals, Erlang(2, μ) claims.
//!
//! Premiums may be constant, linear c + εu, polynomial, or bounded with
//! p′(u) = O(1/u²); the last class behaves like a constant at infinity (P1)
//! while growing premiums (P2) change the decay of ψ from exponential to
//! gamma-like tails.
//!
//! Four evaluation routes cross-validate each other:
//!
//! * [`exact`] — closed forms: incomplete-gamma expressions for `ExpExp`,
//!   Kummer-U integrals for `Erlang2Exp`, Bessel-I/K integrals for
//!   `ExpErlang2` with linear premiums;
//! * [`bvp`] — direct numerical solution of the underlying ODEs, stable
//!   shooting plus a calibration step at u = 0;
//! * [`montecarlo`] — reproducible parallel path simulation;
//! * [`analysis`] — large-reserve asymptotic envelopes and constant fitting.
//!
//! The `ruinprob` binary (see [`cli`]) exposes all of it as batch commands
//! emitting CSV.

pub mod analysis;
pub mod bvp;
pub mod cli;
pub mod error;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod odecore;
mod rk;
pub mod specfun;

pub use error::{Error, Result};
