//! Adaptive Gauss–Kronrod quadrature on finite and semi-infinite intervals.
//!
//! A 7-point Gauss rule embedded in a 15-point Kronrod rule gives each panel
//! a value and an error estimate; panels live in a max-heap keyed by that
//! estimate and the worst one is bisected until the summed estimate meets the
//! requested tolerance.  Semi-infinite integrals are folded onto [0, 1) by
//! t = a + s/(1 − s); every Kronrod node is interior, so the map's endpoint
//! singularity is never sampled.  Panels contributing less than tol·10⁻³ of
//! the running total can never reach the top of the heap, which is what
//! truncates exponentially decaying tails.
//!
//! The tolerance is applied relative to the integral's magnitude (for O(1)
//! integrals this coincides with the absolute reading); tail integrals far
//! below 1 keep full relative accuracy instead of converging trivially.

use crate::error::{Error, Result};

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureResult {
    /// Estimate of the integral.
    pub value: f64,
    /// Conservative absolute error estimate (sum of per-panel estimates).
    pub abs_error_estimate: f64,
    /// Number of integrand evaluations spent.
    pub evaluations: u32,
}

// 15-point Kronrod abscissae (positive half) and weights; the embedded
// 7-point Gauss rule uses nodes 1, 3, 5 and the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// One panel: interval, Kronrod value, error estimate.
#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Evaluate the GK15 pair on [a, b]; returns (value, error_estimate) or None
/// if the integrand produced a non-finite value.
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Option<(f64, f64)> {
    let half = 0.5 * (b - a);
    let centre = 0.5 * (a + b);
    let mut fv = [0.0f64; 15];
    let fc = f(centre);
    fv[14] = fc;
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv[j] = f1;
        fv[7 + j] = f2;
        resk += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    if !resk.is_finite() {
        return None;
    }
    let value = resk * half;
    // Scaled error estimate (QUADPACK style): compare against the spread of
    // |f − mean| so smooth panels are not over-refined.
    let mean = resk * 0.5;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[7 + j] - mean).abs());
    }
    resasc *= half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
    }
    // Below f64 node resolution the Gauss and Kronrod samples collide and
    // their difference is pure roundoff; claim the whole panel instead of
    // trusting it (QUADPACK handles the same situation with its roundoff
    // counters).
    if half.abs() <= 8.0 * f64::EPSILON * a.abs().max(b.abs()) {
        err = err.max(resasc).max(value.abs());
    }
    Some((value, err))
}

const MAX_PANELS: usize = 4000;

/// Adaptive driver over an explicit finite interval.
fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("quadrature tol must be > 0, got {tol}")));
    }
    if a == b {
        return Ok(QuadratureResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 1 });
    }
    let mut evaluations = 0u32;
    let eval_panel = |f: &mut F, lo: f64, hi: f64, evals: &mut u32| -> Result<Panel> {
        *evals += 15;
        match gk15(f, lo, hi) {
            Some((value, error)) => Ok(Panel { a: lo, b: hi, value, error }),
            None => Err(Error::Domain(format!(
                "integrand returned a non-finite value on [{lo:.6e}, {hi:.6e}]"
            ))),
        }
    };

    let mut heap = std::collections::BinaryHeap::new();
    let first = eval_panel(f, a, b, &mut evaluations)?;
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);

    loop {
        let scale = total.abs().max(f64::MIN_POSITIVE);
        if total_err <= tol * scale {
            break;
        }
        if !total.is_finite() || total.abs() > 1e290 {
            return Err(Error::Divergence(
                "integral estimate exceeds the floating-point range".into(),
            ));
        }
        if heap.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence(format!(
                "error estimate {total_err:.3e} still above {:.3e} after {} panels",
                tol * scale,
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        // Tail-truncation rule: when even the worst panel is negligible
        // against the running total, further refinement cannot matter.
        if worst.error <= tol * 1e-3 * scale / (heap.len() + 1) as f64 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // The panel is already at floating-point resolution yet still
            // carries material error (the truncation rule above would have
            // caught it otherwise): a non-integrable feature, not a
            // refinable one.
            return Err(Error::QuadratureNonConvergence(format!(
                "panel [{:.6e}, {:.6e}] is at floating-point resolution with error {:.3e}",
                worst.a, worst.b, worst.error
            )));
        }
        let left = eval_panel(f, worst.a, mid, &mut evaluations)?;
        let right = eval_panel(f, mid, worst.b, &mut evaluations)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    Ok(QuadratureResult { value: total, abs_error_estimate: total_err, evaluations })
}

/// Integrate `f` over the finite interval [a, b] to relative tolerance `tol`.
///
/// # Errors
/// Non-convergence if the budget is exhausted above tolerance; domain error
/// if the integrand produces NaN/∞; divergence if the estimate overflows.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<QuadratureResult> {
    if a <= b {
        adapt(&mut f, a, b, tol)
    } else {
        let mut r = adapt(&mut f, b, a, tol)?;
        r.value = -r.value;
        Ok(r)
    }
}

/// Integrate `f` over [a, ∞) to relative tolerance `tol`.
///
/// The interval is mapped to [0, 1) by t = a + s/(1−s); the integrand must
/// decay fast enough (eventually exponentially) for the transformed problem
/// to be proper, which every integral in this crate guarantees by
/// construction.
///
/// # Errors
/// As [`integrate`]; a divergent tail typically surfaces as either the
/// divergence or the non-convergence variant.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: f64) -> Result<QuadratureResult> {
    let mut g = |s: f64| {
        let om = 1.0 - s;
        let t = a + s / om;
        let v = f(t);
        // Exponential decay beats the 1/(1−s)² Jacobian; a zero integrand far
        // out must not poison the panel with 0·∞.
        if v == 0.0 {
            0.0
        } else {
            v / (om * om)
        }
    };
    adapt(&mut g, 0.0, 1.0, tol)
}

/// Cached cumulative integral y ↦ ∫_lo^y f(z) dz.
///
/// Evaluations insert anchor points so that later calls integrate only the
/// gap from the nearest anchor (in either direction); a whole increasing
/// sweep costs one pass over the integrand.  The cache is mutex-guarded:
/// concurrent readers each see a consistent snapshot.
pub struct CumulativeIntegral<F> {
    f: F,
    lo: f64,
    tol: f64,
    anchors: std::sync::Mutex<Vec<(f64, f64)>>,
}

impl<F: Fn(f64) -> f64> CumulativeIntegral<F> {
    /// New cache for ∫_lo^y f with per-gap relative tolerance `tol`.
    pub fn new(f: F, lo: f64, tol: f64) -> Self {
        CumulativeIntegral { f, lo, tol, anchors: std::sync::Mutex::new(vec![(lo, 0.0)]) }
    }

    /// Evaluate ∫_lo^y f(z) dz.
    ///
    /// # Errors
    /// Propagates quadrature failures; domain error for y < lo.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !y.is_finite() || y < self.lo {
            return Err(Error::Domain(format!(
                "cumulative integral evaluated at {y}, below the lower limit {}",
                self.lo
            )));
        }
        let mut anchors = self.anchors.lock().expect("cumulative-integral cache poisoned");
        let idx = anchors.partition_point(|&(x, _)| x < y);
        // Exact hit?
        if idx < anchors.len() && anchors[idx].0 == y {
            return Ok(anchors[idx].1);
        }
        // Nearest anchor on either side.
        let (x0, v0) = if idx == 0 {
            anchors[0]
        } else if idx == anchors.len() {
            anchors[idx - 1]
        } else {
            let below = anchors[idx - 1];
            let above = anchors[idx];
            if y - below.0 <= above.0 - y { below } else { above }
        };
        let w = y - x0;
        // A sliver gap (anchors from repeated nearby evaluations can sit
        // ULPs apart) stalls adaptive quadrature: the panel's error is its
        // own near-zero value, and no bisection can improve it.  A
        // trapezoid is exact to O(w³) — far below any tolerance against
        // the accumulated total.
        let v = if w.abs() <= 1e-6 * y.abs().max(1.0) {
            v0 + 0.5 * ((self.f)(x0) + (self.f)(y)) * w
        } else {
            v0 + integrate(&self.f, x0, y, self.tol)?.value
        };
        let pos = anchors.partition_point(|&(x, _)| x < y);
        anchors.insert(pos, (y, v));
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: composite Simpson on [a, b] with n (even) panels.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        assert!(n % 2 == 0);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn exponential_tail_is_one() {
        let r = integrate_to_infinity(|t: f64| (-t).exp(), 0.0, 1e-10).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-10, "got {}", r.value);
        assert!(r.abs_error_estimate >= 0.0 && r.evaluations >= 1);
    }

    #[test]
    fn shifted_first_moment_tail() {
        // ∫_1^∞ t e^{−t} dt = 2/e by parts.
        let r = integrate_to_infinity(|t: f64| t * (-t).exp(), 1.0, 1e-10).unwrap();
        assert!((r.value - 2.0 / std::f64::consts::E).abs() <= 1e-10);
    }

    #[test]
    fn gaussian_half_integral() {
        let r = integrate_to_infinity(|t: f64| (-t * t).exp(), 0.0, 1e-10).unwrap();
        assert!((r.value - 0.5 * std::f64::consts::PI.sqrt()).abs() <= 1e-10);
    }

    #[test]
    fn finite_interval_matches_simpson_oracle() {
        let f = |t: f64| (t.sin() + 1.5).ln() * (-0.3 * t).exp();
        let r = integrate(f, 0.0, 7.0, 1e-12).unwrap();
        let oracle = simpson(f, 0.0, 7.0, 20_000);
        assert!((r.value - oracle).abs() < 1e-9, "adaptive {} vs simpson {}", r.value, oracle);
    }

    #[test]
    fn splitting_agrees_within_estimates() {
        // ∫_a^∞ = ∫_a^b + ∫_b^∞ for random-ish split points.
        let f = |t: f64| (1.0 + t).recip() * (-0.7 * t).exp();
        let whole = integrate_to_infinity(f, 0.5, 1e-11).unwrap();
        for &b in &[0.9, 2.3, 7.7, 19.2] {
            let head = integrate(f, 0.5, b, 1e-11).unwrap();
            let tail = integrate_to_infinity(f, b, 1e-11).unwrap();
            let diff = (whole.value - head.value - tail.value).abs();
            let budget = (whole.abs_error_estimate + head.abs_error_estimate + tail.abs_error_estimate)
                .max(1e-13);
            assert!(diff <= budget, "split at {b}: diff {diff} > budget {budget}");
        }
    }

    #[test]
    fn tiny_tail_integral_keeps_relative_accuracy() {
        // ∫_40^∞ e^{−2t} dt = e^{−80}/2 ≈ 9e−36: relative-tolerance semantics
        // must hold even though the absolute value is far below any sane tol.
        let r = integrate_to_infinity(|t: f64| (-2.0 * t).exp(), 40.0, 1e-10).unwrap();
        let truth = (-80.0f64).exp() / 2.0;
        assert!((r.value - truth).abs() <= 1e-9 * truth);
    }

    #[test]
    fn non_finite_integrand_is_a_domain_error() {
        let r = integrate(|t: f64| 1.0 / t, -1.0, 1.0, 1e-8);
        assert!(matches!(r, Err(Error::Domain(_)) | Err(Error::QuadratureNonConvergence(_))));
    }

    #[test]
    fn divergent_tail_is_reported() {
        let r = integrate_to_infinity(|t: f64| 1.0 / (1.0 + t), 0.0, 1e-8);
        assert!(r.is_err(), "divergent integral must not return Ok");
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(|t: f64| t * t, 0.0, 2.0, 1e-12).unwrap();
        let bwd = integrate(|t: f64| t * t, 2.0, 0.0, 1e-12).unwrap();
        assert!((fwd.value + bwd.value).abs() < 1e-14);
        assert!((fwd.value - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cumulative_cache_matches_direct_integrals() {
        let ci = CumulativeIntegral::new(|z: f64| (1.0 + z).recip(), 0.0, 1e-12);
        // Out-of-order probes exercise both gap directions.
        for &y in &[3.0, 1.0, 10.0, 2.0, 9.5, 0.0, 4.25] {
            let got = ci.eval(y).unwrap();
            let want = (1.0 + y).ln();
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "y={y}: {got} vs {want}");
        }
        assert!(ci.eval(-1.0).is_err());
    }

    #[test]
    fn cumulative_cache_survives_ulp_separated_probes() {
        // Repeated nearby evaluations leave anchors ULPs apart; the gap
        // from such an anchor must not be fed to adaptive quadrature (its
        // error floor is the gap's own value, which can never meet a
        // tolerance relative to itself).
        let ci = CumulativeIntegral::new(|z: f64| -1.0 - 4.0 / (1.0 + 2.0 * z), 0.0, 1e-10);
        let y0 = 50.333333333333336;
        let v0 = ci.eval(y0).unwrap();
        for bump in 1..=3u64 {
            let y = f64::from_bits(y0.to_bits() + bump);
            let v = ci.eval(y).unwrap();
            assert!((v - v0).abs() < 1e-9, "bump {bump}: {v} vs {v0}");
        }
        // And a moderate sliver (well above ULP, below the trapezoid cap)
        // still tracks the true integral −y − 2 ln(1+2y).
        let y1 = y0 + 3e-5;
        let want = -y1 - 2.0 * (1.0 + 2.0 * y1).ln();
        let got = ci.eval(y1).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs(), "{got} vs {want}");
    }
}
