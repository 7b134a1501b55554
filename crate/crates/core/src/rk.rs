//! Adaptive explicit Runge–Kutta integration (Dormand–Prince 5(4)).
//!
//! Shared by the boundary-value solver and the Monte Carlo flow maps.  The
//! problems here are smooth and non-stiff on the scales we integrate over
//! (exponential envelopes are handled in log space by the callers), so an
//! embedded explicit pair with PI-free step control is enough.

use crate::error::{Error, Result};

/// Step-size and tolerance controls for [`integrate_adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct RkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First step size; `None` derives one from the interval length.
    pub h_init: Option<f64>,
    /// Smallest |step| before the integration is declared stiff.
    pub h_min: f64,
    pub max_steps: u64,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions { rel_tol: 1e-10, abs_tol: 1e-12, h_init: None, h_min: 1e-12, max_steps: 2_000_000 }
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order weights (identical to the last A row: FSAL pair).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction), calling
/// `observer(t, y)` at `t0` and after every accepted step.
///
/// Returns the state at `t1`.
///
/// # Errors
/// [`Error::Stiffness`] when the controller pushes the step below
/// `h_min·max(1, |t|)` or exhausts `max_steps`; invalid-input for non-finite
/// bounds or initial state.
pub fn integrate_adaptive<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    opts: &RkOptions,
    mut observer: impl FnMut(f64, &[f64; N]),
) -> Result<[f64; N]> {
    if !t0.is_finite() || !t1.is_finite() || y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("ODE bounds and initial state must be finite".into()));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let span = (t1 - t0).abs();
    observer(t0, &y0);
    if span == 0.0 {
        return Ok(y0);
    }

    let mut t = t0;
    let mut y = y0;
    let mut h = opts.h_init.map(f64::abs).unwrap_or(span / 100.0).min(span) * dir;
    let mut k0 = f(t, &y);
    let mut steps = 0u64;

    loop {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::Stiffness(format!(
                "step budget {} exhausted at t = {t:.6e} (span [{t0:.3e}, {t1:.3e}])",
                opts.max_steps
            )));
        }
        if h.abs() < opts.h_min * t.abs().max(1.0) {
            return Err(Error::Stiffness(format!(
                "step size {:.3e} underflowed h_min at t = {t:.6e}",
                h.abs()
            )));
        }
        // Do not step past the endpoint.
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }

        let mut k = [[0.0f64; N]; 7];
        k[0] = k0;
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s + 1] = f(t + C[s] * h, &ys);
        }

        let mut y5 = y;
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            let e = h * (d5 - d4) / scale;
            err_sq += e * e;
        }
        let err = (err_sq / N as f64).sqrt();

        if !err.is_finite() {
            // Overflow inside a trial step: shrink hard and retry.
            h *= 0.25;
            continue;
        }
        if err <= 1.0 {
            t += h;
            y = y5;
            // FSAL: the last stage of the accepted step seeds the next one.
            k0 = k[6];
            observer(t, &y);
            if (t - t1) * dir >= 0.0 {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}
