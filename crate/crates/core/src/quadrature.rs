//! Adaptive Simpson quadrature.

use alloc::format;

use crate::math::abs;
use crate::{Error, Result};

/// Absolute tolerance used throughout the crate.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Maximum bisection depth per panel; deep enough to reach a 1/ξ-type
/// singularity at 1e-14 from a panel of width 10.
pub const DEFAULT_MAX_DEPTH: u32 = 64;
/// Per-panel tolerances stop halving at this fraction of the total.
const TOLERANCE_FLOOR: f64 = 1e-9;

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement.
///
/// Fails with [`Error::Numeric`] when a panel still misses its share of the
/// tolerance after `max_depth` bisections.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite integration bounds [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, tol, max_depth).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let value = refine(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        tol,
        tol * TOLERANCE_FLOOR,
        max_depth,
    )?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric(format!(
            "integrand is not finite on [{a}, {b}]"
        )))
    }
}

/// Integrates over `[a, b]` splitting at every breakpoint that falls strictly
/// inside, so kinks of piecewise integrands sit on panel edges.
pub fn integrate_with_breaks<F>(f: &F, a: f64, b: f64, breaks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut total = 0.0;
    let mut lo = a;
    let mut sorted = [0.0f64; 8];
    let n = breaks.len().min(sorted.len());
    sorted[..n].copy_from_slice(&breaks[..n]);
    sorted[..n].sort_by(|x, y| x.total_cmp(y));
    for &p in &sorted[..n] {
        if p > lo && p < b {
            total += adaptive_simpson(f, lo, p, DEFAULT_TOLERANCE, DEFAULT_MAX_DEPTH)?;
            lo = p;
        }
    }
    total += adaptive_simpson(f, lo, b, DEFAULT_TOLERANCE, DEFAULT_MAX_DEPTH)?;
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    min_tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let sum = left + right;
    // Accept at the tolerance, at round-off level, or when the panel can no
    // longer be split in floating point.
    if abs(delta) <= 15.0 * tol || abs(delta) <= 4.0 * f64::EPSILON * abs(sum) || lm <= a || rm >= b
    {
        return Ok(sum + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{a:e}, {b:e}]: panel error {:e} exceeds {:e}",
            abs(delta) / 15.0,
            tol
        )));
    }
    let half = (0.5 * tol).max(min_tol);
    Ok(
        refine(f, a, m, fa, flm, fm, left, half, min_tol, depth - 1)?
            + refine(f, m, b, fm, frm, fb, right, half, min_tol, depth - 1)?,
    )
}
