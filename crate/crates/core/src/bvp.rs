//! Boundary-value solver for the ruin probability under general premiums.
//!
//! Where no closed form exists, ψ is recovered from the second-order equation
//! satisfied by h = −ψ′ on a truncated reserve domain [0, u_max]:
//!
//! * Erlang(2) interarrivals carry one decaying and one growing
//!   characteristic mode, so forward integration is hopeless — the solver
//!   integrates **backward** from `u_max`, seeded with the stable root's
//!   local direction, which damps any contamination by the growing mode.
//!   The state is renormalised whenever |h| leaves the representable middle
//!   of the double range, accumulating the log of the scale factor, since
//!   the stable profile spans hundreds of float orders on long domains.
//! * Erlang(2) claims have two decaying modes (no unstable direction), so a
//!   **forward** two-basis sweep from u = 0 is stable; the physical solution
//!   is the combination fixed by the two-condition closure at zero reserve.
//!
//! In both cases the tail mass beyond `u_max` is modelled by the local
//! asymptotic direction (`tail_mode = AsymptoticSeed`) or dropped
//! (`ZeroSeed`), and the overall amplitude comes from the same
//! integro-differential closure at u = 0 that calibrates the closed-form
//! solutions — the residual of the defining equation is driven to zero at
//! the origin, which is the one reproducible normalisation available when
//! the amplitude constants are not known in closed form.

use crate::error::{Error, Result};
use crate::exact::{CurvePoint, Method, RuinCurve};
use crate::model::{classify_premium, safe_load_check, ModelCase, ModelSpec, PremiumClass};
use crate::odecore::{
    build_coefficients, char_roots, root_correction, stable_integrand, OdeCoefficients, RootIndex,
};
use crate::rk::{integrate_adaptive, RkOptions};

/// Node spacing policy for the reported curve.
///
/// `n` counts grid cells; the curve carries `n + 1` points including both
/// endpoints.  Geometric spacing concentrates nodes near u = 0 where ψ
/// varies fastest: cell widths grow by `ratio` per cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpacing {
    Uniform { n: usize },
    Geometric { n: usize, ratio: f64 },
}

/// How the solution is seeded and closed at the truncation boundary.
///
/// `AsymptoticSeed` points the seed along the corrected stable direction
/// ρ + ρ⁽¹⁾ at `u_max` and adds the implied exponential tail integral;
/// `ZeroSeed` uses the uncorrected root and imposes ψ(u_max) = 0.  The
/// difference between the two is a direct read of the truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailMode {
    AsymptoticSeed,
    ZeroSeed,
}

/// Configuration for [`solve_ruin`].
#[derive(Clone, Debug)]
pub struct BvpConfig {
    /// Truncation reserve.  `None` picks the smallest u at which the
    /// asymptotic envelope from the coefficient analysis falls below
    /// `tol·1e−2`, coupling the domain length to the decay actually
    /// exhibited by the model.
    pub u_max: Option<f64>,
    pub grid: GridSpacing,
    /// Target absolute error on ψ; also the ceiling for the estimated tail
    /// mass at `u_max`.
    pub tol: f64,
    pub tail_mode: TailMode,
}

impl Default for BvpConfig {
    fn default() -> Self {
        BvpConfig {
            u_max: None,
            grid: GridSpacing::Uniform { n: 200 },
            tol: 1e-8,
            tail_mode: TailMode::AsymptoticSeed,
        }
    }
}

impl BvpConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidInput(format!(
                "tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if let Some(u) = self.u_max {
            if !(u > 0.0 && u.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "u_max must be positive and finite, got {u}"
                )));
            }
        }
        match self.grid {
            GridSpacing::Uniform { n } => {
                if n < 1 || n > 1_000_000 {
                    return Err(Error::InvalidInput(format!(
                        "uniform grid needs 1 ≤ n ≤ 1e6 cells, got {n}"
                    )));
                }
            }
            GridSpacing::Geometric { n, ratio } => {
                if n < 1 || n > 1_000_000 {
                    return Err(Error::InvalidInput(format!(
                        "geometric grid needs 1 ≤ n ≤ 1e6 cells, got {n}"
                    )));
                }
                if !(ratio > 1.0 && ratio.is_finite()) {
                    return Err(Error::InvalidInput(format!(
                        "geometric ratio must exceed 1, got {ratio}"
                    )));
                }
                if n as f64 * ratio.ln() > 300.0 {
                    return Err(Error::InvalidInput(format!(
                        "geometric grid span overflows: n·ln(ratio) = {:.1} > 300",
                        n as f64 * ratio.ln()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Solves the truncated boundary-value problem for ψ and returns the curve
/// on the configured grid, tagged [`Method::Bvp`].
///
/// The returned curve has ψ(u_max) ≤ `tol`, lies in [0, 1], and is
/// non-increasing; the estimated tail mass beyond `u_max` and the sign
/// stability of the computed profile are checked on every solve.
///
/// # Errors
/// * `Unsupported` for the exponential/exponential case (closed forms cover
///   it; see the exact module).
/// * `SafeLoad` when a constant or bounded premium violates the net-profit
///   condition (the curve would be ψ ≡ 1).
/// * `Truncation` when the estimated tail mass at `u_max` exceeds `tol` —
///   raise `u_max` or the tolerance.
/// * `Stiffness` when adaptive step control underflows.
/// * `Calibration` when the zero-reserve closure is singular or produces a
///   probability outside [0, 1].
/// * `Internal` when a solver-health assertion (sign stability,
///   monotonicity) trips.
pub fn solve_ruin(m: &ModelSpec, cfg: &BvpConfig) -> Result<RuinCurve> {
    cfg.validate()?;
    // Revalidate the parameter set: ModelSpec fields are public.
    let m = ModelSpec::new(m.case, m.lambda, m.mu, m.premium.clone())?;
    if m.case == ModelCase::ExpExp {
        return Err(Error::Unsupported(
            "exponential interarrivals with exponential claims have a closed-form ruin \
             probability for every premium class; use the exact curve instead"
                .into(),
        ));
    }
    if classify_premium(&m.premium)? != PremiumClass::P2 {
        let report = safe_load_check(&m)?;
        if !report.satisfied {
            return Err(Error::SafeLoad(format!(
                "net-profit condition fails (margin {:.6}); ruin is certain and the \
                 boundary-value problem has no decaying solution",
                report.margin
            )));
        }
    }
    let co = build_coefficients(&m)?;
    let u_max = resolve_u_max(&m, &co, cfg)?;
    let grid = build_grid(u_max, &cfg.grid);
    match m.case {
        ModelCase::Erlang2Exp => solve_backward(&m, &co, cfg, &grid),
        ModelCase::ExpErlang2 => solve_forward(&m, &co, cfg, &grid),
        ModelCase::ExpExp => unreachable!("rejected above"),
    }
}

// ---------------------------------------------------------------------------
// Domain and grid construction.
// ---------------------------------------------------------------------------

/// Smallest u (geometric scan, capped at 400) where the stable asymptotic
/// envelope drops below `tol·1e−2`; the margin keeps the truncated tail two
/// orders below the requested accuracy.
fn resolve_u_max(m: &ModelSpec, co: &OdeCoefficients, cfg: &BvpConfig) -> Result<f64> {
    if let Some(u) = cfg.u_max {
        return Ok(u);
    }
    // ψ decays with the fast (only stable) root for Erlang(2) interarrivals
    // and with the slow root for Erlang(2) claims, where both modes decay.
    let idx = match m.case {
        ModelCase::Erlang2Exp => RootIndex::One,
        ModelCase::ExpErlang2 => RootIndex::Two,
        ModelCase::ExpExp => unreachable!(),
    };
    let envelope = stable_integrand(co, idx, 1e-10)?;
    let target = (cfg.tol * 1e-2).ln();
    let mut u = 5.0;
    while u <= 400.0 {
        if envelope.ln_eval(u)? <= target {
            return Ok(u);
        }
        u *= 1.3;
    }
    Err(Error::Truncation(format!(
        "asymptotic envelope stays above tol·1e−2 = {:.3e} out to u = 400; \
         the model decays too slowly for this tolerance — pass an explicit u_max",
        cfg.tol * 1e-2
    )))
}

fn build_grid(u_max: f64, g: &GridSpacing) -> Vec<f64> {
    match *g {
        GridSpacing::Uniform { n } => {
            let mut nodes: Vec<f64> =
                (0..=n).map(|k| u_max * k as f64 / n as f64).collect();
            nodes[n] = u_max;
            nodes
        }
        GridSpacing::Geometric { n, ratio } => {
            // u_k = u_max·(r^k − 1)/(r^n − 1), via expm1 for small ln r.
            let lnr = ratio.ln();
            let den = (n as f64 * lnr).exp_m1();
            let mut nodes: Vec<f64> = (0..=n)
                .map(|k| u_max * (k as f64 * lnr).exp_m1() / den)
                .collect();
            nodes[n] = u_max;
            nodes
        }
    }
}

// ---------------------------------------------------------------------------
// Erlang(2) interarrivals: backward sweep.
// ---------------------------------------------------------------------------

/// Per-node record of the backward sweep, in the running scale at the time
/// the node was passed: the true values are `h·e^σ` and `s·e^σ`.
struct BackNode {
    h: f64,
    s: f64,
    sigma: f64,
}

fn solve_backward(
    m: &ModelSpec,
    co: &OdeCoefficients,
    cfg: &BvpConfig,
    grid: &[f64],
) -> Result<RuinCurve> {
    let u_max = *grid.last().expect("grid is non-empty");
    let lambda = m.lambda;
    let p0 = m.premium.eval(0.0);
    let dp0 = m.premium.deriv(0.0);

    let (r1, _) = char_roots(co, u_max)?;
    let corr = root_correction(co, RootIndex::One, u_max)?;
    let rho_eff = r1 + corr;
    if !(rho_eff < 0.0) {
        return Err(Error::Internal(format!(
            "stable direction at u_max = {u_max} is not decaying: ρ₁ + ρ₁⁽¹⁾ = {rho_eff:.6e}"
        )));
    }
    // Seed h(u_max) = 1 (the scale drops out through the closure); the tail
    // integral ∫_{u_max}^∞ of an exponential with local rate ρ is −h/ρ.
    let (seed_slope, tail) = match cfg.tail_mode {
        TailMode::AsymptoticSeed => (rho_eff, -1.0 / rho_eff),
        TailMode::ZeroSeed => (r1, 0.0),
    };
    // Always estimate the dropped mass with the corrected rate, even when
    // the closure itself uses ZeroSeed — that is the truncation check.
    let tail_estimate = -1.0 / rho_eff;

    let opts = RkOptions::default();
    let rhs = |u: f64, y: &[f64; 3]| [y[1], -(co.q1(u) * y[1] + co.q0(u) * y[0]), -y[0]];

    let mut y = [1.0, seed_slope, 0.0];
    let mut sigma = 0.0;
    let mut nodes_desc: Vec<BackNode> = Vec::with_capacity(grid.len());
    nodes_desc.push(BackNode { h: 1.0, s: 0.0, sigma: 0.0 });

    for w in grid.windows(2).rev() {
        let (lo, hi) = (w[0], w[1]);
        // Sub-step so the state grows at most ~e^40 between renormalisation
        // checks, whatever the output grid looks like.
        let mut t = hi;
        while t > lo {
            let (rloc, _) = char_roots(co, t)?;
            let sub = (40.0 / rloc.abs().max(0.25)).min(t - lo);
            let t_next = if t - sub <= lo { lo } else { t - sub };
            y = integrate_adaptive(rhs, t, t_next, y, &opts, |_, _| {})?;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Internal(format!(
                    "backward sweep produced a non-finite state near u = {t_next:.3e}"
                )));
            }
            let mag = y[0].abs().max(y[1].abs());
            if mag > 1e250 {
                for v in &mut y {
                    *v /= mag;
                }
                sigma += mag.ln();
            }
            t = t_next;
        }
        nodes_desc.push(BackNode { h: y[0], s: y[2], sigma });
    }

    let (h0, hp0, s0) = (y[0], y[1], y[2]);
    let sigma0 = sigma;
    for nd in &nodes_desc {
        if !(nd.h > 0.0) {
            return Err(Error::Internal(
                "stable solution changed sign during the backward sweep — the grid is too \
                 coarse or the parameters sit outside the solver's regime"
                    .into(),
            ));
        }
    }

    // Zero-reserve closure.  With ψ(u) = A·(s(u)·e^σ + tail) the defining
    // equation's residual at u = 0,
    //   p₀²ψ″(0) + (p₀p₀′ − 2λp₀)ψ′(0) + λ²ψ(0) − λ² = 0,
    // fixes A through (ψ′ = −A·h·e^σ, ψ″ = −A·h′·e^σ):
    //   A·{e^{σ₀}[−p₀²h₀′ − (p₀p₀′ − 2λp₀)h₀ + λ²s₀] + λ²·tail} = λ².
    // Dividing the brace by e^{σ₀} keeps every term representable.
    let scale_back = (-sigma0).exp();
    let denom =
        -p0 * p0 * hp0 - (p0 * dp0 - 2.0 * lambda * p0) * h0 + lambda * lambda * (s0 + tail * scale_back);
    if !denom.is_finite() || denom <= 0.0 {
        return Err(Error::Calibration(format!(
            "zero-reserve closure produced a non-positive normaliser ({denom:.6e})"
        )));
    }
    let l2 = lambda * lambda;
    let tail_psi = l2 * tail_estimate * scale_back / denom;
    if tail_psi > cfg.tol {
        return Err(Error::Truncation(format!(
            "estimated tail mass at u_max = {u_max} is {tail_psi:.3e} > tol = {:.3e}; \
             increase u_max",
            cfg.tol
        )));
    }
    // Tail-model uncertainty: the whole tail for ZeroSeed (it is dropped),
    // half of it for the first-order asymptotic model.
    let tail_err = match cfg.tail_mode {
        TailMode::AsymptoticSeed => 0.5 * tail_psi,
        TailMode::ZeroSeed => tail_psi,
    };

    let mut points = Vec::with_capacity(grid.len());
    for (k, nd) in nodes_desc.iter().rev().enumerate() {
        let psi = l2 * (nd.s * (nd.sigma - sigma0).exp() + tail * scale_back) / denom;
        points.push(CurvePoint {
            u: grid[k],
            psi: psi.clamp(0.0, 1.0),
            err: 1e-8 * psi.abs() + tail_err,
        });
    }
    finish_curve(m, points, cfg)
}

// ---------------------------------------------------------------------------
// Erlang(2) claims: forward two-basis sweep.
// ---------------------------------------------------------------------------

fn solve_forward(
    m: &ModelSpec,
    co: &OdeCoefficients,
    cfg: &BvpConfig,
    grid: &[f64],
) -> Result<RuinCurve> {
    let u_max = *grid.last().expect("grid is non-empty");
    let lambda = m.lambda;
    let p0 = m.premium.eval(0.0);
    let dp0 = m.premium.deriv(0.0);

    let opts = RkOptions::default();
    let rhs = |u: f64, y: &[f64; 3]| [y[1], -(co.q1(u) * y[1] + co.q0(u) * y[0]), y[0]];

    // Bases h_a: (h, h′)(0) = (1, 0) and h_b: (0, 1).  Both characteristic
    // modes decay here, so the forward sweep is stable; the integral of h
    // over each cell is accumulated in the third component and reset per
    // cell so late-reserve values are sums of local positive terms rather
    // than differences of large ones.
    let mut ya = [1.0, 0.0, 0.0];
    let mut yb = [0.0, 1.0, 0.0];
    let ncells = grid.len() - 1;
    let mut seg_a = Vec::with_capacity(ncells);
    let mut seg_b = Vec::with_capacity(ncells);
    let mut ha = Vec::with_capacity(grid.len());
    let mut hb = Vec::with_capacity(grid.len());
    ha.push(ya[0]);
    hb.push(yb[0]);
    for w in grid.windows(2) {
        ya[2] = 0.0;
        yb[2] = 0.0;
        ya = integrate_adaptive(rhs, w[0], w[1], ya, &opts, |_, _| {})?;
        yb = integrate_adaptive(rhs, w[0], w[1], yb, &opts, |_, _| {})?;
        if ya.iter().chain(yb.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Internal(format!(
                "forward sweep produced a non-finite state near u = {:.3e}",
                w[1]
            )));
        }
        seg_a.push(ya[2]);
        seg_b.push(yb[2]);
        ha.push(ya[0]);
        hb.push(yb[0]);
    }

    // Tail closure at u_max: any combination of the two decaying modes
    // aligns with the slow one, whose corrected local rate prices the tail.
    let (_, r2) = char_roots(co, u_max)?;
    let corr2 = root_correction(co, RootIndex::Two, u_max)?;
    let rho_slow = r2 + corr2;
    if !(rho_slow < 0.0) {
        return Err(Error::Internal(format!(
            "slow direction at u_max = {u_max} is not decaying: ρ₂ + ρ₂⁽¹⁾ = {rho_slow:.6e}"
        )));
    }
    let (tail_a, tail_b) = match cfg.tail_mode {
        TailMode::AsymptoticSeed => (-ya[0] / rho_slow, -yb[0] / rho_slow),
        TailMode::ZeroSeed => (0.0, 0.0),
    };
    let s_a0: f64 = seg_a.iter().sum::<f64>() + tail_a;
    let s_b0: f64 = seg_b.iter().sum::<f64>() + tail_b;

    // Zero-reserve closure, two conditions for two amplitudes.  Writing
    // w = −ψ′ = γ_a·h_a + γ_b·h_b, the residual and its derivative at 0,
    //   p₀w(0) + λψ(0) − λ = 0,   (λ − p₀′)w(0) − p₀w′(0) = 0,
    // become a 2×2 system in (γ_a, γ_b) through (w, w′)(0) = (γ_a, γ_b).
    let a11 = p0 + lambda * s_a0;
    let a12 = lambda * s_b0;
    let a21 = lambda - dp0;
    let a22 = -p0;
    let det = a11 * a22 - a12 * a21;
    let scale = (a11.abs() + a12.abs()) * (a21.abs() + a22.abs());
    if !det.is_finite() || det.abs() <= 1e-10 * scale.max(1e-300) {
        // Conditioning of this closure for unbounded premiums is the known
        // soft spot of the formulation; report rather than guess.
        return Err(Error::Calibration(format!(
            "zero-reserve closure is numerically singular (det = {det:.3e}, scale = {scale:.3e})"
        )));
    }
    let g_a = lambda * a22 / det;
    let g_b = -lambda * a21 / det;

    let w0 = g_a; // γ_a·h_a(0) + γ_b·h_b(0)
    if !(w0 > 0.0) {
        return Err(Error::Calibration(format!(
            "calibrated profile has non-positive slope magnitude at zero reserve ({w0:.6e})"
        )));
    }
    for (i, (&a, &b)) in ha.iter().zip(hb.iter()).enumerate() {
        let w = g_a * a + g_b * b;
        if w < -1e-9 * w0 {
            return Err(Error::Internal(format!(
                "calibrated profile changed sign at grid node {i} — the truncation domain \
                 or grid does not resolve the solution"
            )));
        }
    }

    let tail_comb = g_a * tail_a + g_b * tail_b;
    let w_end = g_a * ya[0] + g_b * yb[0];
    let tail_estimate = -w_end / rho_slow;
    if tail_estimate > cfg.tol {
        return Err(Error::Truncation(format!(
            "estimated tail mass at u_max = {u_max} is {tail_estimate:.3e} > tol = {:.3e}; \
             increase u_max",
            cfg.tol
        )));
    }
    let tail_err = match cfg.tail_mode {
        TailMode::AsymptoticSeed => 0.5 * tail_estimate,
        TailMode::ZeroSeed => tail_estimate,
    };

    // ψ at node i is the sum of the combined cell integrals beyond it plus
    // the combined tail — positive terms only, so no cancellation at depth.
    let mut psis = vec![0.0; grid.len()];
    psis[ncells] = tail_comb;
    for i in (0..ncells).rev() {
        psis[i] = psis[i + 1] + g_a * seg_a[i] + g_b * seg_b[i];
    }
    let points = grid
        .iter()
        .zip(psis.iter())
        .map(|(&u, &psi)| CurvePoint {
            u,
            psi: psi.clamp(0.0, 1.0),
            err: 1e-8 * psi.abs() + tail_err,
        })
        .collect();
    finish_curve(m, points, cfg)
}

// ---------------------------------------------------------------------------
// Shared post-solve checks.
// ---------------------------------------------------------------------------

fn finish_curve(m: &ModelSpec, points: Vec<CurvePoint>, cfg: &BvpConfig) -> Result<RuinCurve> {
    let psi0 = points.first().expect("curve is non-empty").psi;
    if !(psi0 > 0.0 && psi0 <= 1.0) {
        return Err(Error::Calibration(format!(
            "calibrated ψ(0) = {psi0:.6e} is not a probability"
        )));
    }
    let last = points.last().expect("curve is non-empty");
    if last.psi > cfg.tol {
        return Err(Error::Truncation(format!(
            "ψ(u_max) = {:.3e} exceeds tol = {:.3e}",
            last.psi, cfg.tol
        )));
    }
    for w in points.windows(2) {
        if w[1].psi > w[0].psi + 1e-12 {
            return Err(Error::Internal(format!(
                "solved curve is not non-increasing near u = {:.6e}",
                w[1].u
            )));
        }
    }
    Ok(RuinCurve { points, method: Method::Bvp, model: m.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{ruin_constant_premium, ruin_erlang2exp_linear, ruin_experlang2_linear};
    use crate::model::PremiumFunction;
    use crate::montecarlo::{default_horizon, simulate_ruin};

    fn erlang2_const() -> ModelSpec {
        ModelSpec::new(
            ModelCase::Erlang2Exp,
            1.0,
            2.0,
            PremiumFunction::Constant { c: 1.0 },
        )
        .unwrap()
    }

    fn curve_psi_at(curve: &RuinCurve, u: f64) -> f64 {
        let pt = curve
            .points
            .iter()
            .find(|p| (p.u - u).abs() < 1e-9)
            .unwrap_or_else(|| panic!("no grid node at u = {u}"));
        pt.psi
    }

    // Backward sweep vs the single-exponential closed form; the unstable
    // +√3 mode makes this a genuine test of the backward strategy.
    #[test]
    fn backward_solver_matches_erlang2_constant_closed_form() {
        let m = erlang2_const();
        let cfg = BvpConfig {
            u_max: Some(14.0),
            grid: GridSpacing::Uniform { n: 140 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        assert_eq!(curve.method, Method::Bvp);
        assert_eq!(curve.points.len(), 141);
        for pt in &curve.points {
            let (_, psi) =
                ruin_constant_premium(ModelCase::Erlang2Exp, 1.0, 1.0, 2.0, pt.u).unwrap();
            if psi > 1e-12 {
                assert!(
                    (pt.psi - psi).abs() <= 1e-6 * psi.max(1e-4),
                    "u = {}: bvp {} vs closed {}",
                    pt.u,
                    pt.psi,
                    psi
                );
            }
        }
    }

    // Decay rate of the solved curve vs the closed-form rate √3 (within 2%).
    #[test]
    fn backward_solver_recovers_root_three_decay_rate() {
        let m = erlang2_const();
        let cfg = BvpConfig {
            u_max: Some(14.0),
            grid: GridSpacing::Uniform { n: 140 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        let p1 = curve_psi_at(&curve, 1.0);
        let p4 = curve_psi_at(&curve, 4.0);
        let rate = (p1.ln() - p4.ln()) / 3.0;
        let expected = 3.0_f64.sqrt();
        assert!(
            (rate - expected).abs() <= 0.02 * expected,
            "fitted rate {rate} vs {expected}"
        );
    }

    // Backward sweep vs the Kummer-profile solution for p = 1 + 0.5u.
    #[test]
    fn backward_solver_matches_kummer_linear_solution() {
        let m = ModelSpec::new(
            ModelCase::Erlang2Exp,
            1.0,
            2.0,
            PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        )
        .unwrap();
        let cfg = BvpConfig {
            u_max: Some(20.0),
            grid: GridSpacing::Uniform { n: 200 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        for &u in &[0.0, 0.5, 1.0, 2.0, 3.5, 5.0] {
            let exact = ruin_erlang2exp_linear(1.0, 0.5, 1.0, 2.0, u).unwrap();
            let bvp = curve_psi_at(&curve, u);
            // Within max(tol, the exact solution's own calibration accuracy).
            assert!(
                (bvp - exact).abs() <= 3e-5,
                "u = {u}: bvp {bvp} vs exact {exact}"
            );
        }
    }

    // Forward sweep vs the two-exponential closed form.
    #[test]
    fn forward_solver_matches_experlang2_constant_closed_form() {
        let m = ModelSpec::new(
            ModelCase::ExpErlang2,
            1.0,
            1.0,
            PremiumFunction::Constant { c: 3.0 },
        )
        .unwrap();
        let curve = solve_ruin(&m, &BvpConfig::default()).unwrap();
        for pt in &curve.points {
            let (_, psi) =
                ruin_constant_premium(ModelCase::ExpErlang2, 3.0, 1.0, 1.0, pt.u).unwrap();
            if psi > 1e-10 {
                assert!(
                    (pt.psi - psi).abs() <= 1e-6 * psi.max(1e-3),
                    "u = {}: bvp {} vs closed {}",
                    pt.u,
                    pt.psi,
                    psi
                );
            }
        }
    }

    // Forward sweep vs the Bessel-profile solution for p = 1 + u.
    #[test]
    fn forward_solver_matches_bessel_linear_solution() {
        let m = ModelSpec::new(
            ModelCase::ExpErlang2,
            2.0,
            1.0,
            PremiumFunction::Linear { c: 1.0, eps: 1.0 },
        )
        .unwrap();
        let cfg = BvpConfig {
            u_max: Some(35.0),
            grid: GridSpacing::Uniform { n: 350 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        for &u in &[0.0, 0.5, 1.0, 2.0, 3.0] {
            let (exact, _) = ruin_experlang2_linear(1.0, 1.0, 2.0, 1.0, u).unwrap();
            let bvp = curve_psi_at(&curve, u);
            assert!(
                (bvp - exact).abs() <= 2e-3,
                "u = {u}: bvp {bvp} vs exact {exact}"
            );
        }
    }

    // A premium that levels off keeps the constant-premium decay rate of its
    // limit level: the log-slope converges to the slow root within 3%.
    #[test]
    fn bounded_premium_log_slope_matches_limit_root() {
        let m = ModelSpec::new(
            ModelCase::ExpErlang2,
            1.0,
            1.0,
            PremiumFunction::BoundedRational { c: 3.0, a: 1.0 },
        )
        .unwrap();
        let cfg = BvpConfig {
            u_max: Some(90.0),
            grid: GridSpacing::Uniform { n: 900 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        let p40 = curve_psi_at(&curve, 40.0);
        let p70 = curve_psi_at(&curve, 70.0);
        let slope = (p70.ln() - p40.ln()) / 30.0;
        // Slow root of the limiting constant-premium problem at c = 3.
        let disc = (1.0_f64 + 4.0 * 3.0).sqrt();
        let rho = -(2.0 * 3.0 - 1.0 - disc) / (2.0 * 3.0);
        assert!(
            (slope - rho).abs() <= 0.03 * rho.abs(),
            "log-slope {slope} vs limiting rate {rho}"
        );
    }

    // No closed form at all: a polynomial premium cross-checked against
    // simulation at zero reserve.
    #[test]
    fn polynomial_premium_matches_simulation() {
        let m = ModelSpec::new(
            ModelCase::Erlang2Exp,
            1.0,
            2.0,
            PremiumFunction::Polynomial { c: 1.0, eps: vec![0.3, 0.1] },
        )
        .unwrap();
        let curve = solve_ruin(&m, &BvpConfig::default()).unwrap();
        let psi0 = curve.points[0].psi;
        let horizon = default_horizon(&m, 400.0);
        let sim = simulate_ruin(&m, 0.0, horizon, 100_000, 0x00b1_7e5).unwrap();
        let se = sim.half_width_95 / 1.96;
        assert!(
            (psi0 - sim.psi_hat).abs() <= 3.5 * se + 1e-4,
            "bvp {psi0} vs simulated {} ± {se}",
            sim.psi_hat
        );
        assert!(!sim.truncation_flag);
    }

    // Halving the step changes ψ by less than 4× the reported error.
    #[test]
    fn grid_refinement_stays_within_error_budget() {
        let m = erlang2_const();
        let coarse_cfg = BvpConfig {
            u_max: Some(14.0),
            grid: GridSpacing::Uniform { n: 70 },
            ..BvpConfig::default()
        };
        let fine_cfg = BvpConfig {
            u_max: Some(14.0),
            grid: GridSpacing::Uniform { n: 140 },
            ..BvpConfig::default()
        };
        let coarse = solve_ruin(&m, &coarse_cfg).unwrap();
        let fine = solve_ruin(&m, &fine_cfg).unwrap();
        for (i, pt) in coarse.points.iter().enumerate() {
            let twin = fine.points[2 * i];
            assert!((twin.u - pt.u).abs() < 1e-9);
            assert!(
                (twin.psi - pt.psi).abs() <= 4.0 * pt.err,
                "u = {}: refinement moved ψ by {} with err {}",
                pt.u,
                (twin.psi - pt.psi).abs(),
                pt.err
            );
        }
    }

    // Doubling u_max changes ψ on [0, u_max/2] by less than tol.
    #[test]
    fn doubling_u_max_changes_curve_below_tol() {
        let m = ModelSpec::new(
            ModelCase::Erlang2Exp,
            1.0,
            2.0,
            PremiumFunction::Linear { c: 1.0, eps: 0.5 },
        )
        .unwrap();
        let short_cfg = BvpConfig {
            u_max: Some(18.0),
            grid: GridSpacing::Uniform { n: 90 },
            ..BvpConfig::default()
        };
        let long_cfg = BvpConfig {
            u_max: Some(36.0),
            grid: GridSpacing::Uniform { n: 180 },
            ..BvpConfig::default()
        };
        let short = solve_ruin(&m, &short_cfg).unwrap();
        let long = solve_ruin(&m, &long_cfg).unwrap();
        for pt in short.points.iter().filter(|p| p.u <= 9.0 + 1e-9) {
            let twin = long
                .points
                .iter()
                .find(|q| (q.u - pt.u).abs() < 1e-9)
                .unwrap();
            assert!(
                (twin.psi - pt.psi).abs() < short_cfg.tol,
                "u = {}: doubling u_max moved ψ by {}",
                pt.u,
                (twin.psi - pt.psi).abs()
            );
        }
    }

    // The two tail modes agree once the domain is long enough for the tail
    // to be negligible.
    #[test]
    fn zero_seed_agrees_with_asymptotic_seed() {
        let m = erlang2_const();
        let asym = solve_ruin(&m, &BvpConfig::default()).unwrap();
        let zero = solve_ruin(
            &m,
            &BvpConfig { tail_mode: TailMode::ZeroSeed, ..BvpConfig::default() },
        )
        .unwrap();
        let d0 = (asym.points[0].psi - zero.points[0].psi).abs();
        assert!(d0 <= 1e-8, "tail modes disagree at u = 0 by {d0}");
    }

    #[test]
    fn geometric_grid_matches_uniform_solution() {
        let m = erlang2_const();
        let cfg = BvpConfig {
            u_max: Some(14.0),
            grid: GridSpacing::Geometric { n: 120, ratio: 1.03 },
            ..BvpConfig::default()
        };
        let curve = solve_ruin(&m, &cfg).unwrap();
        let first_cell = curve.points[1].u - curve.points[0].u;
        let last_cell = curve.points[120].u - curve.points[119].u;
        assert!(first_cell < last_cell, "geometric grid should widen");
        let (_, psi0) = ruin_constant_premium(ModelCase::Erlang2Exp, 1.0, 1.0, 2.0, 0.0).unwrap();
        assert!((curve.points[0].psi - psi0).abs() <= 1e-7);
    }

    #[test]
    fn exp_exp_is_delegated_to_exact() {
        let m = ModelSpec::new(
            ModelCase::ExpExp,
            1.0,
            2.0,
            PremiumFunction::Constant { c: 1.0 },
        )
        .unwrap();
        assert!(matches!(
            solve_ruin(&m, &BvpConfig::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn unsafe_premium_is_rejected() {
        let m = ModelSpec::new(
            ModelCase::Erlang2Exp,
            1.0,
            1.0,
            PremiumFunction::Constant { c: 0.2 },
        )
        .unwrap();
        assert!(matches!(
            solve_ruin(&m, &BvpConfig::default()),
            Err(Error::SafeLoad(_))
        ));
    }

    #[test]
    fn truncation_error_when_u_max_too_small() {
        let m = erlang2_const();
        let cfg = BvpConfig {
            u_max: Some(2.0),
            grid: GridSpacing::Uniform { n: 20 },
            ..BvpConfig::default()
        };
        assert!(matches!(solve_ruin(&m, &cfg), Err(Error::Truncation(_))));
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let m = erlang2_const();
        let bad_tol = BvpConfig { tol: 0.0, ..BvpConfig::default() };
        assert!(matches!(solve_ruin(&m, &bad_tol), Err(Error::InvalidInput(_))));
        let bad_n = BvpConfig { grid: GridSpacing::Uniform { n: 0 }, ..BvpConfig::default() };
        assert!(matches!(solve_ruin(&m, &bad_n), Err(Error::InvalidInput(_))));
        let bad_ratio = BvpConfig {
            grid: GridSpacing::Geometric { n: 100, ratio: 0.9 },
            ..BvpConfig::default()
        };
        assert!(matches!(solve_ruin(&m, &bad_ratio), Err(Error::InvalidInput(_))));
        let bad_umax = BvpConfig { u_max: Some(-1.0), ..BvpConfig::default() };
        assert!(matches!(solve_ruin(&m, &bad_umax), Err(Error::InvalidInput(_))));
    }
}
