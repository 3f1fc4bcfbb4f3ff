//! Euler–Maruyama finite-volume stepper for the Itô form
//!
//! ```text
//! ∂ₜρ = ΔΦ(ρ) − ∂ₓ(σ(ρ)ξ̇ + ν(ρ)) + ½∂ₓ(F₁ ∂ₓΨ(ρ) + Σ(ρ)F₂)
//! ```
//!
//! with Ψ and Σ the cutoff-regularized correction terms. All fluxes live on
//! faces, so mass changes only through the two boundary faces and through
//! clipping.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::correction::ItoCorrection;
use crate::grid::{divergence_into, face_gradients_into, BoundaryData, DensityState, Grid};
use crate::math::abs;
use crate::noise::{noise_flux_into, IncrementBlock, NoiseField, NoiseSpec, PathRng};
use crate::nonlinear::{CutoffParams, NonlinearTriple};
use crate::{Error, Result};

/// Denominator floor in the diffusive step bound.
pub const DT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub cfl: f64,
    pub cut: CutoffParams,
    pub t_end: f64,
    pub save_times: Vec<f64>,
    pub clip_negative: bool,
}

impl SolverParams {
    pub fn new(cfl: f64, cut: CutoffParams, t_end: f64, save_times: Vec<f64>) -> Result<Self> {
        let p = Self {
            cfl,
            cut,
            t_end,
            save_times,
            clip_negative: true,
        };
        p.validate()?;
        Ok(p)
    }

    /// `count` equally spaced save times from 0 to `t_end` inclusive.
    pub fn uniform_save_times(t_end: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![t_end],
            _ => (0..count)
                .map(|i| {
                    if i + 1 == count {
                        t_end
                    } else {
                        t_end * i as f64 / (count - 1) as f64
                    }
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be > 0, got {}",
                self.t_end
            )));
        }
        if self.save_times.is_empty() {
            return Err(Error::Config("save_times must not be empty".into()));
        }
        for w in self.save_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Config(format!(
                    "save_times must be strictly ascending ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        let (first, last) = (
            self.save_times[0],
            self.save_times[self.save_times.len() - 1],
        );
        if !(first >= 0.0 && last <= self.t_end) {
            return Err(Error::Config(format!(
                "save_times must lie in [0, {}], got [{first}, {last}]",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Everything fixed over a run: geometry, coefficients, noise and boundary
/// data. Immutable and shareable between threads.
#[derive(Debug, Clone)]
pub struct Dynamics {
    grid: Grid,
    triple: NonlinearTriple,
    field: Option<NoiseField>,
    bd: BoundaryData,
    correction: ItoCorrection,
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
struct Workspace {
    cell: Vec<f64>,
    face: Vec<f64>,
    face2: Vec<f64>,
    rhs: Vec<f64>,
    div: Vec<f64>,
    g: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            cell: vec![0.0; n],
            face: vec![0.0; n + 1],
            face2: vec![0.0; n + 1],
            rhs: vec![0.0; n],
            div: vec![0.0; n],
            g: vec![0.0; n + 1],
        }
    }
}

/// States at the save times of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
    pub steps: u64,
}

/// States of a synchronously coupled pair at the save times.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTrajectory {
    pub times: Vec<f64>,
    pub first: Vec<DensityState>,
    pub second: Vec<DensityState>,
    pub steps: u64,
}

impl Dynamics {
    /// `noise = None` switches the stochastic forcing and its Itô correction
    /// off.
    pub fn new(
        grid: Grid,
        triple: NonlinearTriple,
        noise: Option<&NoiseSpec>,
        bd: BoundaryData,
        cut: CutoffParams,
    ) -> Result<Self> {
        let field = noise.map(|s| NoiseField::build(s, &grid)).transpose()?;
        let correction = ItoCorrection::new(&triple, cut)?;
        Ok(Self {
            grid,
            triple,
            field,
            bd,
            correction,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn triple(&self) -> &NonlinearTriple {
        &self.triple
    }

    pub fn field(&self) -> Option<&NoiseField> {
        self.field.as_ref()
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.bd
    }

    pub fn correction(&self) -> &ItoCorrection {
        &self.correction
    }

    fn num_modes(&self) -> usize {
        self.field.as_ref().map_or(0, |f| f.num_modes())
    }

    fn check_len(&self, rho: &[f64]) -> Result<()> {
        if rho.len() != self.grid.len() {
            return Err(Error::Usage(format!(
                "state has {} cells, grid has {}",
                rho.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }

    /// Deterministic face flux (diffusion, Itô correction, transport).
    fn drift_flux_into(&self, rho: &[f64], ws_cell: &mut [f64], tmp: &mut [f64], flux: &mut [f64]) {
        let n = rho.len();
        let dx = self.grid.dx();
        let t = &self.triple;
        let bd = &self.bd;

        for (c, &r) in ws_cell.iter_mut().zip(rho) {
            *c = t.phi(r);
        }
        face_gradients_into(ws_cell, bd.rho_b_left, bd.rho_b_right, dx, flux);

        if let Some(field) = &self.field {
            let corr = &self.correction;
            for (c, &r) in ws_cell.iter_mut().zip(rho) {
                *c = corr.psi(r);
            }
            face_gradients_into(
                ws_cell,
                corr.psi(bd.rho_left),
                corr.psi(bd.rho_right),
                dx,
                tmp,
            );
            let (f1, f2) = (field.f1(), field.f2());
            for j in 0..=n {
                let rbar = face_density(rho, bd, j);
                flux[j] += 0.5 * (f1[j] * tmp[j] + corr.sigma_sigma_prime(rbar) * f2[j]);
            }
        }

        if !t.nu_coefficient().is_zero() {
            for j in 0..=n {
                let rbar = face_density(rho, bd, j);
                let up = if t.nu_prime(rbar) >= 0.0 {
                    if j == 0 {
                        bd.rho_left
                    } else {
                        rho[j - 1]
                    }
                } else if j == n {
                    bd.rho_right
                } else {
                    rho[j]
                };
                flux[j] -= t.nu(up);
            }
        }
    }

    /// Deterministic right-hand side as a cell vector.
    pub fn drift_rhs(&self, state: &DensityState) -> Result<Vec<f64>> {
        self.check_len(&state.rho)?;
        let n = state.rho.len();
        let mut ws = Workspace::new(n);
        self.drift_flux_into(&state.rho, &mut ws.cell, &mut ws.face2, &mut ws.face);
        let mut out = vec![0.0; n];
        divergence_into(&ws.face, self.grid.dx(), &mut out);
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("drift is not finite at cell {i}")));
        }
        Ok(out)
    }

    /// One Euler–Maruyama step. `inc = None` (or noise off) takes a
    /// deterministic step.
    pub fn step(
        &self,
        state: &DensityState,
        dt: f64,
        inc: Option<&IncrementBlock>,
        params: &SolverParams,
    ) -> Result<DensityState> {
        self.check_len(&state.rho)?;
        let mut ws = Workspace::new(self.grid.len());
        let mut next = state.clone();
        let dw = inc.map(|b| b.dw.as_slice());
        if let (Some(dw), Some(f)) = (dw, &self.field) {
            if dw.len() != f.num_modes() {
                return Err(Error::Usage(format!(
                    "increment block has {} modes, noise has {}",
                    dw.len(),
                    f.num_modes()
                )));
            }
        }
        self.step_in_place(&mut next, dt, dw, params.clip_negative, &mut ws, 0)?;
        Ok(next)
    }

    fn step_in_place(
        &self,
        state: &mut DensityState,
        dt: f64,
        dw: Option<&[f64]>,
        clip: bool,
        ws: &mut Workspace,
        step_index: u64,
    ) -> Result<()> {
        let dx = self.grid.dx();
        self.drift_flux_into(&state.rho, &mut ws.cell, &mut ws.face2, &mut ws.face);
        divergence_into(&ws.face, dx, &mut ws.rhs);
        let noisy = match (dw, &self.field) {
            (Some(dw), Some(field)) => {
                field.modes_times_increments_into(dw, &mut ws.g);
                noise_flux_into(&state.rho, &ws.g, &self.triple, &self.bd, &mut ws.face2);
                divergence_into(&ws.face2, dx, &mut ws.div);
                true
            }
            _ => false,
        };
        for i in 0..state.rho.len() {
            let mut v = state.rho[i] + dt * ws.rhs[i];
            if noisy {
                v -= ws.div[i];
            }
            ws.cell[i] = v;
        }
        if ws.cell.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp {
                step: step_index,
                last_good_time: state.time,
            });
        }
        let mut clipped = 0.0;
        if clip {
            for v in ws.cell.iter_mut() {
                if *v < 0.0 {
                    clipped -= *v;
                    *v = 0.0;
                }
            }
        }
        state.rho.copy_from_slice(&ws.cell);
        state.clipped_mass_cum += clipped * dx;
        state.time += dt;
        Ok(())
    }

    /// Largest stable step for `state`, before capping at save times.
    pub fn stable_dt(&self, state: &DensityState, params: &SolverParams) -> f64 {
        self.stable_dt_raw(&state.rho, params.cfl)
    }

    fn stable_dt_raw(&self, rho: &[f64], cfl: f64) -> f64 {
        let bd = &self.bd;
        let points = rho.iter().copied().chain([bd.rho_left, bd.rho_right]);
        let (mut phi_p, mut psi_p, mut nu_p) = (0.0f64, 0.0f64, 0.0f64);
        let noise = self.field.as_ref();
        let has_nu = !self.triple.nu_coefficient().is_zero();
        for r in points {
            phi_p = phi_p.max(self.triple.phi_prime(r));
            if noise.is_some() {
                psi_p = psi_p.max(self.correction.psi_prime(r));
            }
            if has_nu {
                nu_p = nu_p.max(abs(self.triple.nu_prime(r)));
            }
        }
        let f1_max = noise.map_or(0.0, |f| f.f1_max());
        let dx = self.grid.dx();
        let d = (phi_p + 0.5 * f1_max * psi_p).max(DT_FLOOR);
        let mut dt = cfl * dx * dx / d;
        if nu_p > 0.0 {
            dt = dt.min(cfl * dx / nu_p);
        }
        dt
    }

    /// Stable step, shortened so that `next_save` is hit exactly.
    pub fn select_dt(&self, state: &DensityState, params: &SolverParams, next_save: f64) -> f64 {
        cap_to_save(self.stable_dt(state, params), state.time, next_save)
    }

    /// Runs one path from `initial` (taken to be at time 0).
    pub fn simulate(
        &self,
        initial: &DensityState,
        params: &SolverParams,
        rng: &mut PathRng,
    ) -> Result<Trajectory> {
        let mut times = Vec::with_capacity(params.save_times.len());
        let mut states = Vec::with_capacity(params.save_times.len());
        let steps = self.run(initial, params, rng, |s| {
            times.push(s.time);
            states.push(s.clone());
        })?;
        Ok(Trajectory {
            times,
            states,
            steps,
        })
    }

    /// Observer form of [`Self::simulate`]; `observe` sees the state at each
    /// save time. Returns the number of steps taken.
    pub fn run(
        &self,
        initial: &DensityState,
        params: &SolverParams,
        rng: &mut PathRng,
        mut observe: impl FnMut(&DensityState),
    ) -> Result<u64> {
        params.validate()?;
        self.check_len(&initial.rho)?;
        let mut ws = Workspace::new(self.grid.len());
        let mut dw_buf = vec![0.0; self.num_modes()];
        let mut s = initial.clone();
        s.time = 0.0;
        let mut steps = 0u64;
        for &target in &params.save_times {
            while s.time < target {
                let dt = cap_to_save(self.stable_dt_raw(&s.rho, params.cfl), s.time, target);
                let dw = self.draw(rng, dt, &mut dw_buf)?;
                self.step_in_place(&mut s, dt, dw, params.clip_negative, &mut ws, steps)?;
                steps += 1;
                if target - s.time <= 1e-12 * target.max(1.0) {
                    s.time = target;
                }
            }
            observe(&s);
        }
        Ok(steps)
    }

    /// Runs two initial data with identical increments and a common step.
    pub fn simulate_coupled(
        &self,
        first: &DensityState,
        second: &DensityState,
        params: &SolverParams,
        rng: &mut PathRng,
    ) -> Result<PairTrajectory> {
        let cap = params.save_times.len();
        let mut out = PairTrajectory {
            times: Vec::with_capacity(cap),
            first: Vec::with_capacity(cap),
            second: Vec::with_capacity(cap),
            steps: 0,
        };
        out.steps = self.run_coupled(first, second, params, rng, |a, b| {
            out.times.push(a.time);
            out.first.push(a.clone());
            out.second.push(b.clone());
        })?;
        Ok(out)
    }

    /// Observer form of [`Self::simulate_coupled`].
    pub fn run_coupled(
        &self,
        first: &DensityState,
        second: &DensityState,
        params: &SolverParams,
        rng: &mut PathRng,
        mut observe: impl FnMut(&DensityState, &DensityState),
    ) -> Result<u64> {
        params.validate()?;
        self.check_len(&first.rho)?;
        self.check_len(&second.rho)?;
        let mut ws = Workspace::new(self.grid.len());
        let mut dw_buf = vec![0.0; self.num_modes()];
        let (mut a, mut b) = (first.clone(), second.clone());
        a.time = 0.0;
        b.time = 0.0;
        let mut steps = 0u64;
        for &target in &params.save_times {
            while a.time < target {
                let stable = self
                    .stable_dt_raw(&a.rho, params.cfl)
                    .min(self.stable_dt_raw(&b.rho, params.cfl));
                let dt = cap_to_save(stable, a.time, target);
                let dw = self.draw(rng, dt, &mut dw_buf)?;
                self.step_in_place(&mut a, dt, dw, params.clip_negative, &mut ws, steps)?;
                self.step_in_place(&mut b, dt, dw, params.clip_negative, &mut ws, steps)?;
                steps += 1;
                if target - a.time <= 1e-12 * target.max(1.0) {
                    a.time = target;
                    b.time = target;
                }
            }
            observe(&a, &b);
        }
        Ok(steps)
    }

    fn draw<'a>(
        &self,
        rng: &mut PathRng,
        dt: f64,
        buf: &'a mut [f64],
    ) -> Result<Option<&'a [f64]>> {
        if self.field.is_none() {
            return Ok(None);
        }
        rng.fill_increments(dt, buf)?;
        Ok(Some(buf))
    }
}

#[inline]
fn face_density(rho: &[f64], bd: &BoundaryData, j: usize) -> f64 {
    let n = rho.len();
    if j == 0 {
        bd.rho_left
    } else if j == n {
        bd.rho_right
    } else {
        0.5 * (rho[j - 1] + rho[j])
    }
}

#[inline]
fn cap_to_save(dt: f64, now: f64, next_save: f64) -> f64 {
    let remaining = next_save - now;
    if remaining <= 0.0 {
        return dt;
    }
    if dt >= remaining {
        remaining
    } else if remaining < 2.0 * dt {
        // split the remainder evenly rather than leave a sliver
        0.5 * remaining
    } else {
        dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{boundary_face_phi, laplacian_phi};
    use crate::noise::Mode;
    use crate::nonlinear::Coefficient;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use core::f64::consts::PI;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    fn classical(n: usize, noise: Option<&NoiseSpec>, nu: Coefficient, rho_b: f64) -> Dynamics {
        let t = NonlinearTriple::classical(nu);
        let bd = BoundaryData::new(&t, rho_b, rho_b).unwrap();
        Dynamics::new(unit(n), t, noise, bd, CutoffParams::default()).unwrap()
    }

    fn params(t_end: f64, saves: usize) -> SolverParams {
        SolverParams::new(
            0.25,
            CutoffParams::default(),
            t_end,
            SolverParams::uniform_save_times(t_end, saves),
        )
        .unwrap()
    }

    #[test]
    fn noiseless_drift_is_the_laplacian() {
        let d = classical(32, None, Coefficient::Zero, 0.0);
        let s = DensityState::from_fn(d.grid(), |x| 1.0 + (3.0 * x).sin()).unwrap();
        let rhs = d.drift_rhs(&s).unwrap();
        let lap = laplacian_phi(&s, d.triple(), d.boundary(), d.grid());
        assert_eq!(rhs, lap);
    }

    #[test]
    fn boundary_matched_constant_is_steady() {
        for noise in [None, Some(NoiseSpec::default())] {
            let d = classical(16, noise.as_ref(), Coefficient::Zero, 1.7);
            let s = DensityState::new(vec![1.7; 16]).unwrap();
            for v in d.drift_rhs(&s).unwrap() {
                assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
            }
        }
    }

    /// Independent scalar re-computation for Φ = ξ², σ = ξ, F₁ = a², F₂ = 0.
    #[test]
    fn porous_drift_matches_desk_oracle() {
        let amp = 0.7;
        let t = NonlinearTriple::porous_medium(2.0, Coefficient::Zero).unwrap();
        let bd = BoundaryData::new(&t, 0.25, 1.0).unwrap();
        let spec = NoiseSpec::new(vec![Mode::constant(amp)]).unwrap();
        let cut = CutoffParams::default();
        let d = Dynamics::new(unit(8), t, Some(&spec), bd, cut).unwrap();
        let rho = [0.3, 0.9, 1.4, 0.2, 0.0, 0.6, 1.1, 0.8];
        let s = DensityState::new(rho.to_vec()).unwrap();
        let rhs = d.drift_rhs(&s).unwrap();
        let dx = 1.0 / 8.0;
        // Ψ(ξ) = ξ − ¾β for ξ ≥ β; every value used here is 0 or above β
        let beta = cut.beta();
        let psi = |x: f64| {
            if x <= beta / 2.0 {
                0.0
            } else {
                assert!(x >= beta);
                x - 0.75 * beta
            }
        };
        let (rl, rr) = (0.5, 1.0);
        for i in 0..8 {
            let get = |k: isize, f: &dyn Fn(f64) -> f64, edge_l: f64, edge_r: f64| -> f64 {
                if k < 0 {
                    2.0 * edge_l - f(rho[0])
                } else if k > 7 {
                    2.0 * edge_r - f(rho[7])
                } else {
                    f(rho[k as usize])
                }
            };
            let i = i as isize;
            let phi = |x: f64| x * x;
            let lap = (get(i + 1, &phi, 0.25, 1.0) - 2.0 * phi(rho[i as usize])
                + get(i - 1, &phi, 0.25, 1.0))
                / (dx * dx);
            let corr = 0.5
                * amp
                * amp
                * (get(i + 1, &psi, psi(rl), psi(rr)) - 2.0 * psi(rho[i as usize])
                    + get(i - 1, &psi, psi(rl), psi(rr)))
                / (dx * dx);
            assert_relative_eq!(
                rhs[i as usize],
                lap + corr,
                epsilon = 1e-13,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn zero_increments_on_steady_state_change_nothing() {
        let d = classical(16, Some(&NoiseSpec::default()), Coefficient::Zero, 1.0);
        let s = DensityState::new(vec![1.0; 16]).unwrap();
        let inc = IncrementBlock {
            dw: vec![0.0],
            dt: 1e-3,
            step_index: 0,
            path_seed: 0,
        };
        let next = d.step(&s, 1e-3, Some(&inc), &params(1.0, 2)).unwrap();
        for (a, b) in next.rho.iter().zip(&s.rho) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn heat_step_decay_factor() {
        let n = 128;
        let d = classical(n, None, Coefficient::Zero, 0.0);
        let s = DensityState::from_fn(d.grid(), |x| (PI * x).sin()).unwrap();
        let p = params(1.0, 2);
        let dt = d.stable_dt(&s, &p);
        let next = d.step(&s, dt, None, &p).unwrap();
        let ratio = next.rho[n / 2] / s.rho[n / 2];
        let dx = d.grid().dx();
        assert!((ratio - (1.0 - PI * PI * dt)).abs() < 10.0 * (dt * dt + dx * dx * dt));
    }

    #[test]
    fn clipping_is_recorded() {
        let d = classical(8, Some(&NoiseSpec::default()), Coefficient::Zero, 0.0);
        let s = DensityState::new(vec![0.0, 0.0, 1e-3, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let inc = IncrementBlock {
            dw: vec![1.0],
            dt: 1e-4,
            step_index: 0,
            path_seed: 0,
        };
        let next = d.step(&s, 1e-4, Some(&inc), &params(1.0, 2)).unwrap();
        assert!(next.clipped_mass_cum > 0.0);
        assert!(next.rho.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn select_dt_examples() {
        let p = params(1.0, 2);
        let d = classical(32, None, Coefficient::Zero, 0.0);
        let s = DensityState::from_fn(d.grid(), |x| x).unwrap();
        let dx = d.grid().dx();
        assert_abs_diff_eq!(d.stable_dt(&s, &p), 0.25 * dx * dx, epsilon = 1e-18);

        let t = NonlinearTriple::porous_medium(2.0, Coefficient::Zero).unwrap();
        let bd = BoundaryData::new(&t, 0.0, 0.0).unwrap();
        let pm = Dynamics::new(unit(32), t.clone(), None, bd, CutoffParams::default()).unwrap();
        let mut rho = vec![1.0; 32];
        rho[5] = 4.0;
        let s = DensityState::new(rho).unwrap();
        assert_abs_diff_eq!(pm.stable_dt(&s, &p), 0.25 * dx * dx / 8.0, epsilon = 1e-18);

        let noisy = Dynamics::new(
            unit(32),
            t,
            Some(&NoiseSpec::default()),
            bd,
            CutoffParams::default(),
        )
        .unwrap();
        assert!(noisy.stable_dt(&s, &p) < pm.stable_dt(&s, &p));

        // capped to land on the save time
        let s0 = DensityState::new(vec![0.5; 32]).unwrap();
        assert_eq!(d.select_dt(&s0, &p, 1e-5), 1e-5);
    }

    #[test]
    fn coupled_identical_initials_are_bitwise_equal() {
        let d = classical(32, Some(&NoiseSpec::default()), Coefficient::Zero, 1.0);
        let s = DensityState::from_fn(d.grid(), |x| 1.0 + 0.5 * (PI * x).sin()).unwrap();
        let mut rng = PathRng::for_path(11, 0);
        let pair = d
            .simulate_coupled(&s, &s, &params(0.05, 3), &mut rng)
            .unwrap();
        assert_eq!(pair.first, pair.second);
        assert_eq!(pair.times, vec![0.0, 0.025, 0.05]);
    }

    #[test]
    fn simulate_is_deterministic_and_matches_coupled_first_leg() {
        let d = classical(32, Some(&NoiseSpec::default()), Coefficient::Zero, 1.0);
        let s = DensityState::from_fn(d.grid(), |x| 1.0 + 0.5 * (PI * x).sin()).unwrap();
        let p = params(0.02, 3);
        let a = d.simulate(&s, &p, &mut PathRng::for_path(3, 1)).unwrap();
        let b = d.simulate(&s, &p, &mut PathRng::for_path(3, 1)).unwrap();
        assert_eq!(a, b);
        let c = d.simulate(&s, &p, &mut PathRng::for_path(3, 2)).unwrap();
        assert_ne!(a.states.last(), c.states.last());
    }

    #[test]
    fn deterministic_heat_decay() {
        let d = classical(128, None, Coefficient::Zero, 0.0);
        let s = DensityState::from_fn(d.grid(), |x| (PI * x).sin()).unwrap();
        let p = params(0.1, 2);
        let tr = d.simulate(&s, &p, &mut PathRng::new(0)).unwrap();
        let sup = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        let ratio = sup(&tr.states[1].rho) / sup(&s.rho);
        assert!((ratio / (-PI * PI * 0.1).exp() - 1.0).abs() < 0.02);
    }

    #[test]
    fn boundary_face_value_is_anchored() {
        let t = NonlinearTriple::porous_medium(2.0, Coefficient::Zero).unwrap();
        let bd = BoundaryData::new(&t, 0.5, 2.0).unwrap();
        let d = Dynamics::new(
            unit(32),
            t,
            Some(&NoiseSpec::default()),
            bd,
            CutoffParams::default(),
        )
        .unwrap();
        let s = DensityState::from_fn(d.grid(), |x| 1.0 + x).unwrap();
        let tr = d
            .simulate(&s, &params(0.01, 4), &mut PathRng::new(5))
            .unwrap();
        for st in &tr.states {
            let (l, r) = boundary_face_phi(st, d.triple(), d.boundary());
            assert_abs_diff_eq!(l, 0.5, epsilon = 1e-10);
            assert_abs_diff_eq!(r, 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn mass_ledger_balances() {
        let spec = NoiseSpec::new(vec![Mode::constant(1.0), Mode::sine(1, 0.5)]).unwrap();
        let d = classical(32, Some(&spec), Coefficient::linear(1.0), 0.3);
        let s = DensityState::from_fn(d.grid(), |x| 0.3 + (PI * x).sin().powi(2)).unwrap();
        let p = params(1.0, 2);
        let mut rng = PathRng::new(99);
        let mut cur = s;
        let n = d.grid().len();
        let dx = d.grid().dx();
        for _ in 0..50 {
            let dt = d.stable_dt(&cur, &p);
            let inc = rng.sample_increments(2, dt).unwrap();
            let mut ws = Workspace::new(n);
            d.drift_flux_into(&cur.rho, &mut ws.cell, &mut ws.face2, &mut ws.face);
            let drift_out = ws.face[n] - ws.face[0];
            let g = {
                let mut g = vec![0.0; n + 1];
                d.field()
                    .unwrap()
                    .modes_times_increments_into(&inc.dw, &mut g);
                g
            };
            let mut nf = vec![0.0; n + 1];
            noise_flux_into(&cur.rho, &g, d.triple(), d.boundary(), &mut nf);
            let next = d.step(&cur, dt, Some(&inc), &p).unwrap();
            let dm = next.mass(d.grid()) - cur.mass(d.grid());
            let expected =
                dt * drift_out - (nf[n] - nf[0]) + (next.clipped_mass_cum - cur.clipped_mass_cum);
            assert_abs_diff_eq!(dm, expected, epsilon = 1e-12);
            let _ = dx;
            cur = next;
        }
    }

    #[test]
    fn rejects_bad_params() {
        let cut = CutoffParams::default();
        assert!(SolverParams::new(0.0, cut, 1.0, vec![1.0]).is_err());
        assert!(SolverParams::new(0.5, cut, 1.0, vec![0.5, 0.2]).is_err());
        assert!(SolverParams::new(0.5, cut, 1.0, vec![2.0]).is_err());
        assert!(SolverParams::new(0.5, cut, -1.0, vec![0.0]).is_err());
    }
}
