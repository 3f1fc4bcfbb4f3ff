//! The admissible weight w(x) = −exp(αx) + C used to measure contraction.

use alloc::format;
use alloc::vec::Vec;

use crate::grid::Grid;
use crate::math::{abs, exp};
use crate::noise::NoiseField;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    alpha: f64,
    c_shift: f64,
    w: Vec<f64>,
    w_grad: Vec<f64>,
    w_lap: Vec<f64>,
    c_low: f64,
    c_up: f64,
    dx: f64,
}

/// Minimum over cells of each condition's slack; all must be > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackReport {
    /// min −Δw.
    pub laplacian: f64,
    /// min −∂ₓw.
    pub gradient: f64,
    /// min −(F₁Δw + ½(c_link + 1)|F₂∂ₓw|).
    pub combined: f64,
    /// Cell attaining the smallest of the three.
    pub worst_cell: usize,
}

impl SlackReport {
    pub fn passed(&self) -> bool {
        self.laplacian > 0.0 && self.gradient > 0.0 && self.combined > 0.0
    }

    pub fn min(&self) -> f64 {
        self.laplacian.min(self.gradient).min(self.combined)
    }
}

/// Per-cell slacks of the three conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSlacks {
    pub laplacian: Vec<f64>,
    pub gradient: Vec<f64>,
    pub combined: Vec<f64>,
}

/// α = max(1, (1 + margin)(c_link + 1)·2·F₂,sup / F₁,inf).
pub fn admissible_alpha(f1_inf: f64, f2_sup: f64, c_link: f64, margin: f64) -> Result<f64> {
    if !(f1_inf > 0.0) {
        return Err(Error::Config(format!(
            "weight needs non-degenerate noise, got inf F1 = {f1_inf}"
        )));
    }
    if !(c_link >= 0.0 && c_link.is_finite()) {
        return Err(Error::Config(format!("c_link must be >= 0, got {c_link}")));
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(Error::Config(format!("margin must be > 0, got {margin}")));
    }
    Ok(f64::max(
        1.0,
        (1.0 + margin) * (c_link + 1.0) * 2.0 * f2_sup / f1_inf,
    ))
}

impl WeightFunction {
    /// Builds the weight with α chosen from the noise field and verifies the
    /// three conditions at every cell.
    pub fn construct(field: &NoiseField, grid: &Grid, c_link: f64, margin: f64) -> Result<Self> {
        let alpha = admissible_alpha(field.f1_inf(), field.f2_sup(), c_link, margin)?;
        let w = Self::with_alpha(grid, alpha)?;
        let slacks = w.cell_slacks(field, grid, c_link)?;
        let bad = (0..grid.len()).find(|&i| {
            !(slacks.laplacian[i] > 0.0 && slacks.gradient[i] > 0.0 && slacks.combined[i] > 0.0)
        });
        if let Some(i) = bad {
            return Err(Error::Internal(format!(
                "constructed weight violates its conditions at cell {i} (x = {})",
                grid.centers()[i]
            )));
        }
        Ok(w)
    }

    /// The exponential family with a given α and C = exp(α·b) + 1, without
    /// checking admissibility.
    pub fn with_alpha(grid: &Grid, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "weight alpha must be > 0, got {alpha}"
            )));
        }
        let c_shift = exp(alpha * grid.b()) + 1.0;
        let e: Vec<f64> = grid.centers().iter().map(|&x| exp(alpha * x)).collect();
        let w: Vec<f64> = e.iter().map(|&v| c_shift - v).collect();
        let w_grad = e.iter().map(|&v| -alpha * v).collect();
        let w_lap = e.iter().map(|&v| -alpha * alpha * v).collect();
        Self::from_parts(alpha, c_shift, w, w_grad, w_lap, grid.dx())
    }

    /// A constant weight; fails the strict conditions by design.
    pub fn constant(grid: &Grid, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::from_parts(
            0.0,
            value,
            alloc::vec![value; n],
            alloc::vec![0.0; n],
            alloc::vec![0.0; n],
            grid.dx(),
        )
    }

    fn from_parts(
        alpha: f64,
        c_shift: f64,
        w: Vec<f64>,
        w_grad: Vec<f64>,
        w_lap: Vec<f64>,
        dx: f64,
    ) -> Result<Self> {
        let c_low = w.iter().copied().fold(f64::INFINITY, f64::min);
        let c_up = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(c_low > 0.0 && c_up.is_finite()) {
            return Err(Error::Config(format!(
                "weight must be positive and finite, range [{c_low}, {c_up}]"
            )));
        }
        Ok(Self {
            alpha,
            c_shift,
            w,
            w_grad,
            w_lap,
            c_low,
            c_up,
            dx,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn c_shift(&self) -> f64 {
        self.c_shift
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn gradient(&self) -> &[f64] {
        &self.w_grad
    }

    pub fn laplacian(&self) -> &[f64] {
        &self.w_lap
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// (c_low, c_up) = (min w, max w).
    pub fn equivalence_constants(&self) -> (f64, f64) {
        (self.c_low, self.c_up)
    }

    /// Σ |fᵢ| wᵢ Δx.
    pub fn weighted_l1(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.w.len() {
            return Err(Error::Usage(format!(
                "weighted_l1: vector has {} cells, weight has {}",
                f.len(),
                self.w.len()
            )));
        }
        Ok(self.weighted_l1_unchecked(f))
    }

    /// Σ |fᵢ − gᵢ| wᵢ Δx.
    pub fn weighted_l1_distance(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        if f.len() != self.w.len() || g.len() != self.w.len() {
            return Err(Error::Usage(format!(
                "weighted_l1_distance: sizes {} and {}, weight has {}",
                f.len(),
                g.len(),
                self.w.len()
            )));
        }
        Ok(f.iter()
            .zip(g)
            .zip(&self.w)
            .map(|((a, b), w)| abs(a - b) * w)
            .sum::<f64>()
            * self.dx)
    }

    pub(crate) fn weighted_l1_unchecked(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.w).map(|(v, w)| abs(*v) * w).sum::<f64>() * self.dx
    }

    /// Per-cell slacks, with F₁ and F₂ taken from the analytic modes at the
    /// cell centres.
    pub fn cell_slacks(&self, field: &NoiseField, grid: &Grid, c_link: f64) -> Result<CellSlacks> {
        if grid.len() != self.w.len() {
            return Err(Error::Usage(format!(
                "weight has {} cells, grid has {}",
                self.w.len(),
                grid.len()
            )));
        }
        let k = 0.5 * (c_link + 1.0);
        let mut combined = Vec::with_capacity(grid.len());
        for (i, &x) in grid.centers().iter().enumerate() {
            let (f1, f2) = field.f1_f2_at(x);
            combined.push(-(f1 * self.w_lap[i] + k * abs(f2 * self.w_grad[i])));
        }
        Ok(CellSlacks {
            laplacian: self.w_lap.iter().map(|v| -v).collect(),
            gradient: self.w_grad.iter().map(|v| -v).collect(),
            combined,
        })
    }

    pub fn verify_conditions(
        &self,
        field: &NoiseField,
        grid: &Grid,
        c_link: f64,
    ) -> Result<SlackReport> {
        let s = self.cell_slacks(field, grid, c_link)?;
        let min_of = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let worst_cell = (0..s.laplacian.len())
            .min_by(|&i, &j| {
                let a = s.laplacian[i].min(s.gradient[i]).min(s.combined[i]);
                let b = s.laplacian[j].min(s.gradient[j]).min(s.combined[j]);
                a.total_cmp(&b)
            })
            .unwrap_or(0);
        Ok(SlackReport {
            laplacian: min_of(&s.laplacian),
            gradient: min_of(&s.gradient),
            combined: min_of(&s.combined),
            worst_cell,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{Mode, NoiseSpec};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{E, PI};
    use proptest::prelude::*;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn two_mode() -> NoiseSpec {
        NoiseSpec::new(alloc::vec![Mode::constant(1.0), Mode::sine(1, 0.5)]).unwrap()
    }

    #[test]
    fn constant_mode_weight() {
        let g = unit(1000);
        let field = NoiseField::build(&NoiseSpec::default(), &g).unwrap();
        let w = WeightFunction::construct(&field, &g, 0.0, 0.1).unwrap();
        assert_eq!(w.alpha(), 1.0);
        assert_abs_diff_eq!(w.c_shift(), E + 1.0, epsilon = 1e-15);
        // w(0) = e and w(1) = 1 at the endpoints, so the cell extrema are close
        assert_abs_diff_eq!(w.equivalence_constants().1, E, epsilon = 2e-3);
        assert_abs_diff_eq!(w.equivalence_constants().0, 1.0, epsilon = 2e-3);
        assert!(w.laplacian().iter().all(|&v| v < 0.0));
        let r = w.verify_conditions(&field, &g, 0.0).unwrap();
        assert!(r.passed());
        for s in [r.laplacian, r.gradient, r.combined] {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-3);
        }
    }

    #[test]
    fn two_mode_alpha() {
        let g = unit(10_000);
        let field = NoiseField::build(&two_mode(), &g).unwrap();
        let w = WeightFunction::construct(&field, &g, 0.0, 0.1).unwrap();
        assert_abs_diff_eq!(w.alpha(), 1.1 * PI / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.alpha(), 1.728, epsilon = 1e-3);
        for c in [0.0, 1.0] {
            let w = WeightFunction::construct(&field, &g, c, 0.1).unwrap();
            assert!(w.verify_conditions(&field, &g, c).unwrap().passed());
        }
    }

    #[test]
    fn degenerate_noise_is_a_config_error() {
        assert!(matches!(
            admissible_alpha(0.0, 1.0, 0.0, 0.1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn alpha_below_threshold_fails_third_condition() {
        let g = unit(1000);
        let field = NoiseField::build(&two_mode(), &g).unwrap();
        // the pointwise threshold is max ½|F₂|/F₁ ≈ 0.35 for c_link = 0
        let w = WeightFunction::with_alpha(&g, 0.2).unwrap();
        let r = w.verify_conditions(&field, &g, 0.0).unwrap();
        assert!(r.laplacian > 0.0 && r.gradient > 0.0);
        assert!(r.combined <= 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn constant_weight_has_zero_slack() {
        let g = unit(32);
        let field = NoiseField::build(&NoiseSpec::default(), &g).unwrap();
        let r = WeightFunction::constant(&g, 2.0)
            .unwrap()
            .verify_conditions(&field, &g, 0.0)
            .unwrap();
        assert_eq!(r.laplacian, 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn weighted_norm_of_one() {
        let g = unit(1000);
        let field = NoiseField::build(&NoiseSpec::default(), &g).unwrap();
        let w = WeightFunction::construct(&field, &g, 0.0, 0.1).unwrap();
        let ones = alloc::vec![1.0; 1000];
        // ∫₀¹ (−eˣ + e + 1) dx = 2; midpoint rule error is O(Δx²)
        assert_abs_diff_eq!(w.weighted_l1(&ones).unwrap(), 2.0, epsilon = 1e-6);
        assert_eq!(w.weighted_l1(&alloc::vec![0.0; 1000]).unwrap(), 0.0);
        assert!(matches!(w.weighted_l1(&ones[..10]), Err(Error::Usage(_))));
    }

    #[test]
    fn alpha_increase_improves_normalized_margin() {
        let (f1, f2, c) = (1.0, PI / 4.0, 1.0);
        let margin = |a: f64| f1 * a - (c + 1.0) * 2.0 * f2;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..50 {
            let m = margin(0.25 * i as f64);
            assert!(m > prev);
            prev = m;
        }
    }

    proptest! {
        #[test]
        fn sandwich_and_norm_axioms(
            f in proptest::collection::vec(-10.0f64..10.0, 50),
            g in proptest::collection::vec(-10.0f64..10.0, 50),
            lambda in -5.0f64..5.0,
            c_link in 0.0f64..3.0,
        ) {
            let grid = unit(50);
            let field = NoiseField::build(&two_mode(), &grid).unwrap();
            let w = WeightFunction::construct(&field, &grid, c_link, 0.1).unwrap();
            let (lo, up) = w.equivalence_constants();
            prop_assert!(lo >= 1.0);
            let l1: f64 = f.iter().map(|v| v.abs()).sum::<f64>() * grid.dx();
            let nw = w.weighted_l1(&f).unwrap();
            prop_assert!(lo * l1 <= nw * (1.0 + 1e-12));
            prop_assert!(nw <= up * l1 * (1.0 + 1e-12));
            let scaled: Vec<f64> = f.iter().map(|v| lambda * v).collect();
            prop_assert!((w.weighted_l1(&scaled).unwrap() - lambda.abs() * nw).abs() <= 1e-9 * (1.0 + nw));
            let sum: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
            prop_assert!(w.weighted_l1(&sum).unwrap() <= nw + w.weighted_l1(&g).unwrap() + 1e-9);
            prop_assert!(w.verify_conditions(&field, &grid, c_link).unwrap().passed());
        }
    }
}
