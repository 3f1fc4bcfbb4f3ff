use alloc::format;
use alloc::vec::Vec;

use crate::math::{exp, ln};
use crate::{Error, Result};

/// Fewest window points accepted by a fit.
pub const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayModel {
    /// y = c1·exp(−c2·t).
    Exponential { c1: f64, c2: f64 },
    /// y = c·t^p.
    Polynomial { c: f64, p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Coefficient of determination on the log scale.
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    /// q* = (q0 + 1)/q0, when a gap exponent was supplied.
    pub q_star: Option<f64>,
}

impl DecayFit {
    pub fn with_gap_exponent(mut self, q0: f64) -> Self {
        self.q_star = (q0 > 0.0).then(|| (q0 + 1.0) / q0);
        self
    }

    pub fn predict(&self, t: f64) -> f64 {
        match self.model {
            DecayModel::Exponential { c1, c2 } => c1 * exp(-c2 * t),
            DecayModel::Polynomial { c, p } => c * crate::math::powf(t, p),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.model {
            DecayModel::Exponential { .. } => "exponential",
            DecayModel::Polynomial { .. } => "polynomial",
        }
    }
}

/// [0.1·T, T] for the last time T.
pub fn default_window(times: &[f64]) -> (f64, f64) {
    let t = times.last().copied().unwrap_or(0.0);
    (0.1 * t, t)
}

fn window_points(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
) -> Result<(Vec<f64>, Vec<f64>)> {
    if times.len() != values.len() {
        return Err(Error::Usage(format!(
            "fit: {} times but {} values",
            times.len(),
            values.len()
        )));
    }
    let (lo, hi) = window;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for (&t, &y) in times.iter().zip(values) {
        if t >= lo && t <= hi {
            if !(y > 0.0) {
                return Err(Error::Usage(format!(
                    "fit: value {y} at t = {t} is not positive; shrink the window"
                )));
            }
            ts.push(t);
            ys.push(y);
        }
    }
    if ts.len() < MIN_FIT_POINTS {
        return Err(Error::Usage(format!(
            "fit: window [{lo}, {hi}] holds {} points, need at least {MIN_FIT_POINTS}",
            ts.len()
        )));
    }
    Ok((ts, ys))
}

/// Least-squares line v = a + b·u; returns (a, b, R²).
fn linear_fit(u: &[f64], v: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let mu = u.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let (mut suu, mut suv, mut svv) = (0.0, 0.0, 0.0);
    for (&x, &y) in u.iter().zip(v) {
        suu += (x - mu) * (x - mu);
        suv += (x - mu) * (y - mv);
        svv += (y - mv) * (y - mv);
    }
    let b = if suu > 0.0 { suv / suu } else { 0.0 };
    let a = mv - b * mu;
    let ss_res: f64 = u
        .iter()
        .zip(v)
        .map(|(&x, &y)| (y - a - b * x) * (y - a - b * x))
        .sum();
    let r2 = if svv > 0.0 {
        (1.0 - ss_res / svv).clamp(0.0, 1.0)
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (a, b, r2)
}

/// Fits y = c1·exp(−c2·t) by least squares on (t, ln y).
pub fn fit_exponential(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, ys) = window_points(times, values, window)?;
    let logs: Vec<f64> = ys.iter().map(|&y| ln(y)).collect();
    let (a, b, r2) = linear_fit(&ts, &logs);
    Ok(DecayFit {
        model: DecayModel::Exponential { c1: exp(a), c2: -b },
        r_squared: r2,
        window,
        n_points: ts.len(),
        q_star: None,
    })
}

/// Fits y = c·t^p by least squares on (ln t, ln y); the window must avoid
/// t ≤ 0.
pub fn fit_polynomial(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    let (ts, ys) = window_points(times, values, window)?;
    if ts[0] <= 0.0 {
        return Err(Error::Usage(format!(
            "polynomial fit needs t > 0, window starts at {}",
            window.0
        )));
    }
    let lt: Vec<f64> = ts.iter().map(|&t| ln(t)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| ln(y)).collect();
    let (a, b, r2) = linear_fit(&lt, &ly);
    Ok(DecayFit {
        model: DecayModel::Polynomial { c: exp(a), p: b },
        r_squared: r2,
        window,
        n_points: ts.len(),
        q_star: None,
    })
}
