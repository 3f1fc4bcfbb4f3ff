use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::Grid;
use crate::math::{abs, sqrt};
use crate::nonlinear::NonlinearTriple;
use crate::solver::PairTrajectory;
use crate::weight::WeightFunction;
use crate::{Error, Result};

/// Per-path distances of a coupled pair at the save times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathSummary {
    pub times: Vec<f64>,
    /// ‖ρ₁ − ρ₂‖_{L¹_w}.
    pub l1w: Vec<f64>,
    /// ∫ 𝒜(ρ₁, ρ₂) dx.
    pub gap: Vec<f64>,
    /// ‖ρ₁ − ρ₂‖_{L¹}.
    pub l1: Vec<f64>,
    pub mass1: Vec<f64>,
    pub mass2: Vec<f64>,
}

impl PathSummary {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            l1w: Vec::with_capacity(n),
            gap: Vec::with_capacity(n),
            l1: Vec::with_capacity(n),
            mass1: Vec::with_capacity(n),
            mass2: Vec::with_capacity(n),
        }
    }

    pub fn record(
        &mut self,
        time: f64,
        rho1: &[f64],
        rho2: &[f64],
        w: &WeightFunction,
        triple: &NonlinearTriple,
        grid: &Grid,
    ) -> Result<()> {
        let l1w = w.weighted_l1_distance(rho1, rho2)?;
        let dx = grid.dx();
        let (mut gap, mut l1) = (0.0, 0.0);
        for (&a, &b) in rho1.iter().zip(rho2) {
            gap += triple.gap_unchecked(a, b);
            l1 += abs(a - b);
        }
        self.times.push(time);
        self.l1w.push(l1w);
        self.gap.push(gap * dx);
        self.l1.push(l1 * dx);
        self.mass1.push(grid.integrate(rho1));
        self.mass2.push(grid.integrate(rho2));
        Ok(())
    }

    pub fn from_pair(
        pair: &PairTrajectory,
        w: &WeightFunction,
        triple: &NonlinearTriple,
        grid: &Grid,
    ) -> Result<Self> {
        let mut s = Self::with_capacity(pair.times.len());
        for ((t, a), b) in pair.times.iter().zip(&pair.first).zip(&pair.second) {
            s.record(*t, &a.rho, &b.rho, w, triple, grid)?;
        }
        Ok(s)
    }

    /// sup over save times of ‖ρ₁ − ρ₂‖_{L¹}(t) / ‖ρ₁ − ρ₂‖_{L¹}(0).
    pub fn max_l1_ratio(&self) -> f64 {
        match self.l1.first() {
            Some(&l0) if l0 > 0.0 => self.l1.iter().map(|v| v / l0).fold(0.0, f64::max),
            _ => 0.0,
        }
    }
}

/// Ensemble mean of the weighted distance with its standard error and the
/// mean cumulative gap integral ∫₀ᵗ∫𝒜.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCurve {
    pub times: Vec<f64>,
    pub mean_l1w: Vec<f64>,
    pub stderr: Vec<f64>,
    pub cum_gap_integral: Vec<f64>,
    pub n_paths: usize,
}

impl ContractionCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest 2·stderr-corrected increase of the mean between save times;
    /// ≤ 0 means the mean is non-increasing within noise.
    pub fn max_increase(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 1..self.len() {
            let allowance = 2.0
                * sqrt(self.stderr[i] * self.stderr[i] + self.stderr[i - 1] * self.stderr[i - 1]);
            worst = worst.max(self.mean_l1w[i] - self.mean_l1w[i - 1] - allowance);
        }
        worst
    }
}

/// Aggregates path summaries in the given order (the reduction order is
/// fixed, so output is bit-stable).
pub fn contraction_curve(paths: &[PathSummary]) -> Result<ContractionCurve> {
    if paths.len() < 2 {
        return Err(Error::Usage(format!(
            "a contraction curve needs at least 2 paths, got {}",
            paths.len()
        )));
    }
    let times = paths[0].times.clone();
    for (i, p) in paths.iter().enumerate() {
        if p.times != times || p.l1w.len() != times.len() || p.gap.len() != times.len() {
            return Err(Error::Usage(format!(
                "path {i} does not share the time axis of path 0"
            )));
        }
    }
    let n = paths.len() as f64;
    let m = times.len();
    let mut mean = vec![0.0; m];
    let mut stderr = vec![0.0; m];
    let mut gap_mean = vec![0.0; m];
    for k in 0..m {
        let mu = paths.iter().map(|p| p.l1w[k]).sum::<f64>() / n;
        let var = paths
            .iter()
            .map(|p| (p.l1w[k] - mu) * (p.l1w[k] - mu))
            .sum::<f64>()
            / (n - 1.0);
        mean[k] = mu;
        stderr[k] = sqrt(var / n);
        gap_mean[k] = paths.iter().map(|p| p.gap[k]).sum::<f64>() / n;
    }
    let mut cum = vec![0.0; m];
    for k in 1..m {
        cum[k] = cum[k - 1] + 0.5 * (times[k] - times[k - 1]) * (gap_mean[k] + gap_mean[k - 1]);
    }
    Ok(ContractionCurve {
        times,
        mean_l1w: mean,
        stderr,
        cum_gap_integral: cum,
        n_paths: paths.len(),
    })
}

pub fn contraction_curve_from_pairs(
    pairs: &[PairTrajectory],
    w: &WeightFunction,
    triple: &NonlinearTriple,
    grid: &Grid,
) -> Result<ContractionCurve> {
    let summaries = pairs
        .iter()
        .map(|p| PathSummary::from_pair(p, w, triple, grid))
        .collect::<Result<Vec<_>>>()?;
    contraction_curve(&summaries)
}

/// Largest ĉ ≥ 0 with mean(t) ≤ mean(0) − ĉ·G(t) + 2·stderr(t) at every save
/// time, G the cumulative gap integral. `f64::INFINITY` when G vanishes
/// identically (nothing constrains ĉ).
pub fn estimate_super_constant(curve: &ContractionCurve) -> f64 {
    let Some(&m0) = curve.mean_l1w.first() else {
        return f64::INFINITY;
    };
    let mut c = f64::INFINITY;
    for k in 0..curve.len() {
        let g = curve.cum_gap_integral[k];
        if g > 0.0 {
            let slack = m0 - curve.mean_l1w[k] + 2.0 * curve.stderr[k];
            c = c.min(slack / g);
        }
    }
    c.max(0.0)
}
