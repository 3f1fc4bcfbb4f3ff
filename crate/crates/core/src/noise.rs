//! Spatially correlated noise ξ(x, t) = Σₖ fₖ(x) βₖ(t) with analytic modes,
//! the derived fields F₁ = Σ fₖ², F₂ = Σ fₖ fₖ' = ½F₁', F₃ = Σ (fₖ')², and
//! reproducible per-path Brownian increments.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{BoundaryData, DensityState, Grid};
use crate::math::{abs, cos, sin, sqrt};
use crate::nonlinear::NonlinearTriple;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeKind {
    Constant,
    /// sin(2π·freq·(x − a)/(b − a)).
    Sine(u32),
    /// cos(2π·freq·(x − a)/(b − a)).
    Cosine(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub kind: ModeKind,
    pub amplitude: f64,
}

impl Mode {
    pub fn constant(amplitude: f64) -> Self {
        Self {
            kind: ModeKind::Constant,
            amplitude,
        }
    }

    pub fn sine(freq: u32, amplitude: f64) -> Self {
        Self {
            kind: ModeKind::Sine(freq),
            amplitude,
        }
    }

    pub fn cosine(freq: u32, amplitude: f64) -> Self {
        Self {
            kind: ModeKind::Cosine(freq),
            amplitude,
        }
    }

    /// (f(x), f'(x)) on a domain starting at `a` with length `len`.
    fn eval(&self, x: f64, a: f64, len: f64) -> (f64, f64) {
        let amp = self.amplitude;
        match self.kind {
            ModeKind::Constant => (amp, 0.0),
            ModeKind::Sine(k) => {
                let w = 2.0 * PI * k as f64 / len;
                let arg = w * (x - a);
                (amp * sin(arg), amp * w * cos(arg))
            }
            ModeKind::Cosine(k) => {
                let w = 2.0 * PI * k as f64 / len;
                let arg = w * (x - a);
                (amp * cos(arg), -amp * w * sin(arg))
            }
        }
    }
}

/// A finite list of noise modes.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    modes: Vec<Mode>,
}

impl Default for NoiseSpec {
    /// The single constant mode f₁ = 1.
    fn default() -> Self {
        Self {
            modes: vec![Mode::constant(1.0)],
        }
    }
}

impl NoiseSpec {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Config("noise needs at least one mode".into()));
        }
        if modes.iter().all(|m| m.amplitude == 0.0) {
            return Err(Error::Config(
                "noise needs a mode with nonzero amplitude".into(),
            ));
        }
        for m in &modes {
            if !m.amplitude.is_finite() {
                return Err(Error::Config(format!(
                    "mode amplitude {} is not finite",
                    m.amplitude
                )));
            }
            if matches!(m.kind, ModeKind::Sine(0) | ModeKind::Cosine(0)) {
                return Err(Error::Config("trigonometric modes need freq >= 1".into()));
            }
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Modes and the derived fields sampled at cell faces.
#[derive(Debug, Clone)]
pub struct NoiseField {
    spec: NoiseSpec,
    a: f64,
    len: f64,
    f_grid: Vec<Vec<f64>>,
    f_prime_grid: Vec<Vec<f64>>,
    f1: Vec<f64>,
    f2: Vec<f64>,
    f3: Vec<f64>,
    f1_inf: f64,
    f1_max: f64,
    f2_sup: f64,
}

impl NoiseField {
    /// Samples the modes at the faces of `grid`; rejects noise with
    /// inf F₁ ≤ 0 on the faces.
    pub fn build(spec: &NoiseSpec, grid: &Grid) -> Result<Self> {
        let faces = grid.faces();
        let (a, len) = (grid.a(), grid.width());
        let k = spec.len();
        let mut f_grid = vec![vec![0.0; faces.len()]; k];
        let mut f_prime_grid = vec![vec![0.0; faces.len()]; k];
        for (m, mode) in spec.modes().iter().enumerate() {
            for (j, &x) in faces.iter().enumerate() {
                let (v, d) = mode.eval(x, a, len);
                f_grid[m][j] = v;
                f_prime_grid[m][j] = d;
            }
        }
        let mut f1 = vec![0.0; faces.len()];
        let mut f2 = vec![0.0; faces.len()];
        let mut f3 = vec![0.0; faces.len()];
        for m in 0..k {
            for j in 0..faces.len() {
                let (v, d) = (f_grid[m][j], f_prime_grid[m][j]);
                f1[j] += v * v;
                f2[j] += v * d;
                f3[j] += d * d;
            }
        }
        let f1_inf = f1.iter().copied().fold(f64::INFINITY, f64::min);
        let f1_max = f1.iter().copied().fold(0.0, f64::max);
        let f2_sup = f2.iter().map(|v| abs(*v)).fold(0.0, f64::max);
        if !(f1_inf > 0.0) {
            let j = f1.iter().position(|&v| !(v > 0.0)).unwrap_or(0);
            return Err(Error::Config(format!(
                "noise is degenerate: F1 = {} at x = {} (non-degeneracy needs inf F1 > 0)",
                f1[j], faces[j]
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            a,
            len,
            f_grid,
            f_prime_grid,
            f1,
            f2,
            f3,
            f1_inf,
            f1_max,
            f2_sup,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn num_modes(&self) -> usize {
        self.spec.len()
    }

    pub fn f_grid(&self) -> &[Vec<f64>] {
        &self.f_grid
    }

    pub fn f_prime_grid(&self) -> &[Vec<f64>] {
        &self.f_prime_grid
    }

    pub fn f1(&self) -> &[f64] {
        &self.f1
    }

    pub fn f2(&self) -> &[f64] {
        &self.f2
    }

    pub fn f3(&self) -> &[f64] {
        &self.f3
    }

    pub fn f1_inf(&self) -> f64 {
        self.f1_inf
    }

    pub fn f1_max(&self) -> f64 {
        self.f1_max
    }

    pub fn f2_sup(&self) -> f64 {
        self.f2_sup
    }

    /// (F₁(x), F₂(x)) from the analytic modes at an arbitrary point.
    pub fn f1_f2_at(&self, x: f64) -> (f64, f64) {
        self.spec.modes().iter().fold((0.0, 0.0), |(s1, s2), m| {
            let (v, d) = m.eval(x, self.a, self.len);
            (s1 + v * v, s2 + v * d)
        })
    }

    /// gⱼ = Σₖ fₖ(xⱼ) dWₖ at every face.
    #[inline]
    pub fn modes_times_increments_into(&self, dw: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (row, &w) in self.f_grid.iter().zip(dw) {
            if w != 0.0 {
                for (o, &f) in out.iter_mut().zip(row) {
                    *o += f * w;
                }
            }
        }
    }

    /// Martingale face flux σ(ρ̄ⱼ)·Σₖ fₖ(xⱼ) dWₖ, with ρ̄ the arithmetic face
    /// average inside and the boundary density on the two boundary faces.
    pub fn noise_face_flux(
        &self,
        state: &DensityState,
        inc: &IncrementBlock,
        triple: &NonlinearTriple,
        bd: &BoundaryData,
    ) -> Vec<f64> {
        let n = state.rho.len();
        let mut g = vec![0.0; n + 1];
        self.modes_times_increments_into(&inc.dw, &mut g);
        let mut flux = vec![0.0; n + 1];
        noise_flux_into(&state.rho, &g, triple, bd, &mut flux);
        flux
    }
}

#[inline]
pub(crate) fn noise_flux_into(
    rho: &[f64],
    g: &[f64],
    triple: &NonlinearTriple,
    bd: &BoundaryData,
    flux: &mut [f64],
) {
    let n = rho.len();
    flux[0] = triple.sigma(bd.rho_left) * g[0];
    for j in 1..n {
        flux[j] = triple.sigma(0.5 * (rho[j - 1] + rho[j])) * g[j];
    }
    flux[n] = triple.sigma(bd.rho_right) * g[n];
}

/// One Brownian increment per mode over a step of length `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementBlock {
    pub dw: Vec<f64>,
    pub dt: f64,
    pub step_index: u64,
    pub path_seed: u64,
}

/// The splitmix64 output function (increment, then finalize). A bijection
/// on `u64`.
#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `path_index` under `base_seed`; injective in `path_index`.
pub fn derive_path_seed(base_seed: u64, path_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(path_index))
}

/// Per-path Gaussian increment stream. One stream per path; never shared.
#[derive(Debug, Clone)]
pub struct PathRng {
    path_seed: u64,
    step: u64,
    rng: ChaCha8Rng,
}

impl PathRng {
    pub fn new(path_seed: u64) -> Self {
        Self {
            path_seed,
            step: 0,
            rng: ChaCha8Rng::seed_from_u64(path_seed),
        }
    }

    pub fn for_path(base_seed: u64, path_index: u64) -> Self {
        Self::new(derive_path_seed(base_seed, path_index))
    }

    pub fn path_seed(&self) -> u64 {
        self.path_seed
    }

    pub fn steps_drawn(&self) -> u64 {
        self.step
    }

    /// Draws `k` independent N(0, dt) increments.
    pub fn sample_increments(&mut self, k: usize, dt: f64) -> Result<IncrementBlock> {
        let mut dw = vec![0.0; k];
        let step_index = self.step;
        self.fill_increments(dt, &mut dw)?;
        Ok(IncrementBlock {
            dw,
            dt,
            step_index,
            path_seed: self.path_seed,
        })
    }

    /// Allocation-free variant of [`Self::sample_increments`].
    #[inline]
    pub fn fill_increments(&mut self, dt: f64, out: &mut [f64]) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Usage(format!(
                "increment time step must be > 0, got {dt}"
            )));
        }
        let scale = sqrt(dt);
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *v = scale * z;
        }
        self.step += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinear::Coefficient;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn constant_mode_fields() {
        let f = NoiseField::build(&NoiseSpec::default(), &unit(16)).unwrap();
        assert!(f.f1().iter().all(|&v| v == 1.0));
        assert!(f.f2().iter().all(|&v| v == 0.0));
        assert!(f.f3().iter().all(|&v| v == 0.0));
        assert_eq!(f.f1_inf(), 1.0);
    }

    #[test]
    fn two_mode_fields_match_analytic_formulas() {
        let spec = NoiseSpec::new(vec![Mode::constant(1.0), Mode::sine(1, 0.5)]).unwrap();
        let n = 10_000;
        let f = NoiseField::build(&spec, &unit(n)).unwrap();
        for (j, &x) in unit(n).faces().iter().enumerate().step_by(97) {
            let s = (2.0 * PI * x).sin();
            assert_abs_diff_eq!(f.f1()[j], 1.0 + 0.25 * s * s, epsilon = 1e-14);
            assert_abs_diff_eq!(f.f2()[j], PI / 4.0 * (4.0 * PI * x).sin(), epsilon = 1e-13);
        }
        // extrema of the analytic formulas on a 10⁴-point grid
        let sup = (0..=n)
            .map(|j| (PI / 4.0 * (4.0 * PI * j as f64 / n as f64).sin()).abs())
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(f.f2_sup(), sup, epsilon = 1e-12);
        assert_abs_diff_eq!(f.f2_sup(), PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.f1_inf(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lone_sine_mode_is_degenerate() {
        let spec = NoiseSpec::new(vec![Mode::sine(1, 1.0)]).unwrap();
        assert!(matches!(
            NoiseField::build(&spec, &unit(16)),
            Err(Error::Config(_))
        ));
        assert!(NoiseSpec::new(vec![]).is_err());
        assert!(NoiseSpec::new(vec![Mode::constant(0.0)]).is_err());
    }

    #[test]
    fn f2_is_half_the_gradient_of_f1() {
        let spec = NoiseSpec::new(vec![
            Mode::constant(1.0),
            Mode::sine(1, 0.5),
            Mode::cosine(2, 0.3),
        ])
        .unwrap();
        let n = 256;
        let g = unit(n);
        let f = NoiseField::build(&spec, &g).unwrap();
        let mut err = 0.0f64;
        for j in 1..n {
            let fd = 0.5 * (f.f1()[j + 1] - f.f1()[j - 1]) / (2.0 * g.dx());
            err = err.max((fd - f.f2()[j]).abs());
        }
        assert!(err <= 2e-3, "centered difference error {err}");
        // halving the step divides the error by ~4 (second order)
        let g2 = unit(2 * n);
        let f2 = NoiseField::build(&spec, &g2).unwrap();
        let mut err2 = 0.0f64;
        for j in 1..2 * n {
            let fd = 0.5 * (f2.f1()[j + 1] - f2.f1()[j - 1]) / (2.0 * g2.dx());
            err2 = err2.max((fd - f2.f2()[j]).abs());
        }
        assert!(err / err2 > 3.5);
    }

    #[test]
    fn reseeding_reproduces_and_advancing_changes() {
        let mut a = PathRng::for_path(7, 3);
        let mut b = PathRng::for_path(7, 3);
        let first = a.sample_increments(4, 0.01).unwrap();
        let second = a.sample_increments(4, 0.01).unwrap();
        assert_ne!(first.dw, second.dw);
        assert_eq!(second.step_index, 1);
        assert_eq!(b.sample_increments(4, 0.01).unwrap(), first);
        assert!(a.sample_increments(2, 0.0).is_err());
        assert!(a.sample_increments(2, -1.0).is_err());
    }

    #[test]
    fn increments_have_variance_dt() {
        let mut rng = PathRng::new(2024);
        let dt = 0.01;
        let n = 100_000;
        let mut buf = [0.0; 1];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            rng.fill_increments(dt, &mut buf).unwrap();
            s += buf[0];
            s2 += buf[0] * buf[0];
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!((var / dt - 1.0).abs() < 0.03, "variance ratio {}", var / dt);
        assert!(mean.abs() < 4.0 * (dt / n as f64).sqrt());
    }

    #[test]
    fn path_seeds_do_not_collide() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for i in 0..1_000_000u64 {
            assert!(seen.insert(derive_path_seed(42, i)));
        }
    }

    #[test]
    fn face_flux_examples() {
        let g = unit(8);
        let field = NoiseField::build(&NoiseSpec::default(), &g).unwrap();
        let t = NonlinearTriple::classical(Coefficient::Zero);
        let inc = IncrementBlock {
            dw: vec![0.3],
            dt: 0.1,
            step_index: 0,
            path_seed: 0,
        };
        let zero_bd = BoundaryData::new(&t, 0.0, 0.0).unwrap();
        let zero = DensityState::new(vec![0.0; 8]).unwrap();
        assert!(field
            .noise_face_flux(&zero, &inc, &t, &zero_bd)
            .iter()
            .all(|&v| v == 0.0));
        let one_bd = BoundaryData::new(&t, 1.0, 1.0).unwrap();
        let one = DensityState::new(vec![1.0; 8]).unwrap();
        assert!(field
            .noise_face_flux(&one, &inc, &t, &one_bd)
            .iter()
            .all(|&v| v == 0.3));
    }

    #[test]
    fn face_flux_matches_elementwise_oracle() {
        let g = unit(8);
        let spec = NoiseSpec::new(vec![Mode::constant(1.0), Mode::cosine(1, 0.4)]).unwrap();
        let field = NoiseField::build(&spec, &g).unwrap();
        let t = NonlinearTriple::classical(Coefficient::Zero);
        let bd = BoundaryData::new(&t, 0.5, 2.0).unwrap();
        let rho = vec![0.5, 0.5, 0.5, 0.5, 3.0, 3.0, 3.0, 3.0];
        let state = DensityState::new(rho.clone()).unwrap();
        let inc = IncrementBlock {
            dw: vec![0.2, -0.7],
            dt: 0.01,
            step_index: 0,
            path_seed: 0,
        };
        let flux = field.noise_face_flux(&state, &inc, &t, &bd);
        for j in 0..=8 {
            let x = j as f64 / 8.0;
            let noise = 0.2 * 1.0 + (-0.7) * 0.4 * (2.0 * PI * x).cos();
            let dens = if j == 0 {
                0.5
            } else if j == 8 {
                2.0
            } else {
                0.5 * (rho[j - 1] + rho[j])
            };
            assert_abs_diff_eq!(flux[j], dens.sqrt() * noise, epsilon = 1e-14);
        }
    }
}
