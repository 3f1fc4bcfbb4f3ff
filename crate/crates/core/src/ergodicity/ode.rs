//! The comparison ODE h' = −k·h^{q0+1}, k = c·‖w‖^{−(q0+1)}.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{exp, ln, ln_1p, powf};
use crate::{Error, Result};

/// Slack allowed when checking f ≤ h.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;

fn validate(h0: f64, c: f64, w_norm: f64, q0: f64) -> Result<()> {
    let ok = |v: f64| v > 0.0 && v.is_finite();
    if !(ok(h0) && ok(c) && ok(w_norm) && q0 >= 0.0 && q0.is_finite()) {
        return Err(Error::Usage(format!(
            "comparison ODE needs h0, c, w_norm > 0 and q0 >= 0; got ({h0}, {c}, {w_norm}, {q0})"
        )));
    }
    Ok(())
}

/// Closed-form solution at `times`. For q0 > 0,
/// h = h0·(1 + k·q0·t·h0^q0)^{−1/q0}, evaluated through ln1p to stay accurate
/// for small q0; q0 = 0 gives h0·exp(−c·t/‖w‖).
pub fn comparison_ode(h0: f64, c: f64, w_norm: f64, q0: f64, times: &[f64]) -> Result<Vec<f64>> {
    validate(h0, c, w_norm, q0)?;
    if q0 == 0.0 {
        let rate = c / w_norm;
        return Ok(times.iter().map(|&t| h0 * exp(-rate * t)).collect());
    }
    let k = c * powf(w_norm, -(q0 + 1.0));
    let a = k * q0 * powf(h0, q0);
    let ln_h0 = ln(h0);
    Ok(times
        .iter()
        .map(|&t| exp(ln_h0 - ln_1p(a * t) / q0))
        .collect())
}

/// Classical RK4 integration of the same ODE with steps of at most
/// `max_step`, shortened where the decay is fast; used to cross-check the
/// closed form.
pub fn comparison_ode_rk4(
    h0: f64,
    c: f64,
    w_norm: f64,
    q0: f64,
    times: &[f64],
    max_step: f64,
) -> Result<Vec<f64>> {
    validate(h0, c, w_norm, q0)?;
    if !(max_step > 0.0) {
        return Err(Error::Usage(format!(
            "max_step must be > 0, got {max_step}"
        )));
    }
    let k = c * powf(w_norm, -(q0 + 1.0));
    let rhs = |h: f64| -k * powf(h, q0 + 1.0);
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut h) = (0.0f64, h0);
    for &target in times {
        if target < t {
            return Err(Error::Usage(
                "comparison_ode_rk4 needs ascending times".into(),
            ));
        }
        // the local rate k·h^q0 is largest at the start; keep dt·rate ≤ 0.01
        while t < target {
            let rate = k * powf(h, q0);
            let mut dt = max_step.min(0.01 / rate).min(target - t);
            if target - t - dt < 1e-3 * dt {
                dt = target - t;
            }
            let k1 = rhs(h);
            let k2 = rhs(h + 0.5 * dt * k1);
            let k3 = rhs(h + 0.5 * dt * k2);
            let k4 = rhs(h + dt * k3);
            h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        t = target;
        out.push(h);
    }
    Ok(out)
}

/// Index of the first sample with f > h + tolerance, where h solves the
/// comparison ODE from h0 = f(0).
pub fn first_crossing(
    times: &[f64],
    f: &[f64],
    c: f64,
    w_norm: f64,
    q0: f64,
) -> Result<Option<usize>> {
    if times.len() != f.len() || f.is_empty() {
        return Err(Error::Usage(format!(
            "comparison check needs matching nonempty samples, got {} and {}",
            times.len(),
            f.len()
        )));
    }
    let h = comparison_ode(f[0], c, w_norm, q0, times)?;
    Ok(f.iter()
        .zip(&h)
        .position(|(&fv, &hv)| fv > hv + COMPARISON_TOLERANCE))
}

/// Whether the samples stay below the comparison solution.
pub fn bounded_by_comparison(
    times: &[f64],
    f: &[f64],
    c: f64,
    w_norm: f64,
    q0: f64,
) -> Result<bool> {
    Ok(first_crossing(times, f, c, w_norm, q0)?.is_none())
}
