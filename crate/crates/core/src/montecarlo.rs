//! Direct stochastic simulation of the surplus process.
//!
//! Between claim arrivals the surplus grows deterministically along the
//! premium flow `du/dt = p(u)`; at each renewal epoch a claim is subtracted
//! and ruin is declared the first time the surplus goes negative.  Nothing
//! here assumes exponential structure, closed forms, or asymptotics, which
//! makes the estimator the assumption-free cross-check for every analytic
//! path in this crate.
//!
//! The infinite-horizon ruin probability is approximated by a finite-horizon
//! proxy.  Truncation is measured, not assumed: the result carries a flag
//! that trips when a non-negligible share of the observed ruins happened in
//! the late half of the horizon, which is the empirical signature of mass
//! still leaking past the cutoff.
//!
//! Paths use counter-based RNG substreams (one stream per path index), so
//! results are bit-identical for any worker count and any thread schedule.

use crate::error::{Error, Result};
use crate::model::{ModelCase, ModelSpec, PremiumFunction};
use crate::rk::{integrate_adaptive, RkOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Outcome of a finite-horizon ruin simulation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationResult {
    /// Fraction of paths that ruined before the horizon.
    pub psi_hat: f64,
    /// Half-width of the 95% normal-approximation confidence interval.
    pub half_width_95: f64,
    /// Number of simulated paths.
    pub n_paths: u64,
    /// Simulated time horizon.
    pub horizon: f64,
    /// Number of paths that ruined.
    pub ruined_paths: u64,
    /// True when ruins observed after `horizon/2` exceed 0.1% of all ruins,
    /// i.e. when the finite horizon is plausibly biasing `psi_hat` downward.
    pub truncation_flag: bool,
}

/// Surplus level past which the premium flow is frozen.
///
/// A premium growing faster than linearly drives `du/dt = p(u)` to +∞ in
/// finite time (the time-to-level integral ∫du/p converges), which no step
/// controller can follow.  Claims are O(1/μ) and horizons finite, so a
/// surplus this far out can never be ruined again within the simulation;
/// freezing there changes nothing observable and keeps every path finite.
const FLOW_ESCAPE: f64 = 1e8;

/// Advances the surplus along `du/dt = p(u)` for a time `t`.
///
/// Constant and linear premiums use the closed-form flow; every other shape
/// is integrated adaptively to relative tolerance 1e-10.  The flow is
/// non-decreasing in both `u` and `t` because premiums are positive; levels
/// beyond [`FLOW_ESCAPE`] saturate there (see its documentation).
pub fn flow_map(p: &PremiumFunction, u: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("flow time must be >= 0, got {t}")));
    }
    match p {
        PremiumFunction::Constant { c } => Ok(u + c * t),
        PremiumFunction::Linear { c, eps } => Ok((u + c / eps) * (eps * t).exp() - c / eps),
        _ => {
            if t == 0.0 || u >= FLOW_ESCAPE {
                return Ok(u);
            }
            let opts = RkOptions { rel_tol: 1e-10, abs_tol: 1e-12, ..RkOptions::default() };
            let end = integrate_adaptive(
                |_, y: &[f64; 1]| if y[0] >= FLOW_ESCAPE { [0.0] } else { [p.eval(y[0])] },
                0.0,
                t,
                [u],
                &opts,
                |_, _| {},
            );
            match end {
                Ok(y) if y[0].is_finite() => Ok(y[0]),
                // Non-finite state or an underflowed step can only come from
                // explosive growth here (p is validated positive and smooth):
                // the path has escaped.
                Ok(_) => Ok(FLOW_ESCAPE),
                Err(Error::Stiffness(_)) => Ok(FLOW_ESCAPE),
                Err(e) => Err(e),
            }
        }
    }
}

/// Draws an Exp(rate) variate.  `-ln(1-U)` with `U ∈ [0,1)` keeps the
/// argument of the logarithm strictly positive.
fn exp_variate(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(-u).ln_1p() / rate
}

/// One path: returns (ruined, ruined in the late half of the horizon).
fn run_path(
    m: &ModelSpec,
    u0: f64,
    horizon: f64,
    seed: u64,
    path_index: u64,
) -> Result<(bool, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);

    let mut t = 0.0;
    let mut surplus = u0;
    loop {
        let tau = match m.case {
            ModelCase::Erlang2Exp => {
                exp_variate(&mut rng, m.lambda) + exp_variate(&mut rng, m.lambda)
            }
            _ => exp_variate(&mut rng, m.lambda),
        };
        t += tau;
        if t > horizon {
            return Ok((false, false));
        }
        surplus = flow_map(&m.premium, surplus, tau)?;
        if surplus >= FLOW_ESCAPE {
            // Beyond the escape level no claim sequence can bring the path
            // back below zero within any finite horizon: decided, survived.
            return Ok((false, false));
        }
        let claim = match m.case {
            ModelCase::ExpErlang2 => {
                exp_variate(&mut rng, m.mu) + exp_variate(&mut rng, m.mu)
            }
            _ => exp_variate(&mut rng, m.mu),
        };
        surplus -= claim;
        if surplus < 0.0 {
            return Ok((true, t > 0.5 * horizon));
        }
    }
}

/// Estimates the ruin probability from `n_paths` independent paths.
///
/// Deterministic given `(seed, n_paths, parameters)`: path `i` draws from
/// RNG stream `i` of the seeded generator, and the reduction is a plain
/// integer sum, so the result does not depend on the worker count.
pub fn simulate_ruin(
    m: &ModelSpec,
    u: f64,
    horizon: f64,
    n_paths: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "simulation horizon must be positive and finite, got {horizon}"
        )));
    }
    if n_paths == 0 {
        return Err(Error::InvalidInput("need at least one simulation path".into()));
    }
    if !(u >= 0.0) {
        return Err(Error::InvalidInput(format!("initial reserve must be >= 0, got {u}")));
    }

    let (ruined, late) = (0..n_paths)
        .into_par_iter()
        .map(|i| run_path(m, u, horizon, seed, i).map(|(r, l)| (r as u64, l as u64)))
        .try_reduce(|| (0u64, 0u64), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let psi_hat = ruined as f64 / n_paths as f64;
    Ok(SimulationResult {
        psi_hat,
        half_width_95: 1.96 * (psi_hat * (1.0 - psi_hat) / n_paths as f64).sqrt(),
        n_paths,
        horizon,
        ruined_paths: ruined,
        truncation_flag: late as f64 > 1e-3 * ruined as f64,
    })
}

/// A horizon long enough that truncation is negligible for safe-load models:
/// `n_renewals` mean interarrival times.
pub fn default_horizon(m: &ModelSpec, n_renewals: f64) -> f64 {
    n_renewals * m.interarrival_mean()
}
