use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{DensityState, Grid};
use crate::math::sqrt;
use crate::noise::PathRng;
use crate::solver::{Dynamics, SolverParams, Trajectory};
use crate::{Error, Result};

/// Scalar summaries of a density profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub mass: f64,
    pub l2: f64,
    pub max: f64,
}

pub fn observables(rho: &[f64], grid: &Grid) -> Observables {
    let dx = grid.dx();
    Observables {
        mass: rho.iter().sum::<f64>() * dx,
        l2: sqrt(rho.iter().map(|v| v * v).sum::<f64>() * dx),
        max: rho.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    pub path: usize,
    pub initial_id: usize,
    pub time: f64,
    pub obs: Observables,
}

/// Observables at t_burn and t_sample for every (initial, path), plus the
/// mean profile at t_sample per initial.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSamples {
    pub t_burn: f64,
    pub t_sample: f64,
    pub records: Vec<ObservableRecord>,
    pub mean_profiles: Vec<Vec<f64>>,
}

impl ObservableSamples {
    /// Assembles samples from finished paths. `runs` yields
    /// (initial_id, path, trajectory) with trajectories saved at
    /// [t_burn, t_sample]; records are sorted by (initial, path, time).
    pub fn collect<'a>(
        grid: &Grid,
        n_initials: usize,
        t_burn: f64,
        t_sample: f64,
        runs: impl IntoIterator<Item = (usize, usize, &'a Trajectory)>,
    ) -> Result<Self> {
        let mut records = Vec::new();
        let mut sums = vec![vec![0.0; grid.len()]; n_initials];
        let mut counts = vec![0usize; n_initials];
        for (initial_id, path, tr) in runs {
            if initial_id >= n_initials {
                return Err(Error::Usage(format!(
                    "initial id {initial_id} out of range"
                )));
            }
            for st in &tr.states {
                records.push(ObservableRecord {
                    path,
                    initial_id,
                    time: st.time,
                    obs: observables(&st.rho, grid),
                });
            }
            if let Some(last) = tr.states.last() {
                for (s, v) in sums[initial_id].iter_mut().zip(&last.rho) {
                    *s += v;
                }
                counts[initial_id] += 1;
            }
        }
        records.sort_by(|a, b| {
            (a.initial_id, a.path)
                .cmp(&(b.initial_id, b.path))
                .then(a.time.total_cmp(&b.time))
        });
        let mean_profiles = sums
            .into_iter()
            .zip(counts)
            .map(|(s, c)| {
                s.into_iter()
                    .map(|v| if c > 0 { v / c as f64 } else { 0.0 })
                    .collect()
            })
            .collect();
        Ok(Self {
            t_burn,
            t_sample,
            records,
            mean_profiles,
        })
    }

    /// Observables of one initial condition at the sample time, by path.
    pub fn at_sample(&self, initial_id: usize) -> Vec<Observables> {
        self.records
            .iter()
            .filter(|r| r.initial_id == initial_id && r.time == self.t_sample)
            .map(|r| r.obs)
            .collect()
    }
}

fn sampler_params(params: &SolverParams, t_burn: f64, t_sample: f64) -> Result<SolverParams> {
    if !(t_burn >= 0.0 && t_burn < t_sample) {
        return Err(Error::Config(format!(
            "invariant sampling needs 0 <= t_burn < t_sample, got {t_burn} and {t_sample}"
        )));
    }
    let mut p = params.clone();
    p.t_end = t_sample;
    p.save_times = vec![t_burn, t_sample];
    p.validate()?;
    Ok(p)
}

/// One path of the sampler. Path `p` uses the same seed for every initial
/// condition, so the ensembles for different initials are coupled.
pub fn sample_path(
    dynamics: &Dynamics,
    params: &SolverParams,
    initial: &DensityState,
    t_burn: f64,
    t_sample: f64,
    base_seed: u64,
    path: usize,
) -> Result<Trajectory> {
    let p = sampler_params(params, t_burn, t_sample)?;
    dynamics.simulate(initial, &p, &mut PathRng::for_path(base_seed, path as u64))
}

/// Runs every (initial, path) combination sequentially.
pub fn invariant_sampler(
    dynamics: &Dynamics,
    params: &SolverParams,
    initials: &[DensityState],
    t_burn: f64,
    t_sample: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<ObservableSamples> {
    sampler_params(params, t_burn, t_sample)?;
    let mut runs = Vec::with_capacity(initials.len() * n_paths);
    for (i, init) in initials.iter().enumerate() {
        for p in 0..n_paths {
            runs.push((
                i,
                p,
                sample_path(dynamics, params, init, t_burn, t_sample, base_seed, p)?,
            ));
        }
    }
    ObservableSamples::collect(
        dynamics.grid(),
        initials.len(),
        t_burn,
        t_sample,
        runs.iter().map(|(i, p, t)| (*i, *p, t)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergodicity::w1_scalar;
    use crate::grid::BoundaryData;
    use crate::noise::NoiseSpec;
    use crate::nonlinear::{Coefficient, CutoffParams, NonlinearTriple};
    use core::f64::consts::PI;

    fn dynamics(rho_b: f64, noise: bool) -> Dynamics {
        let t = NonlinearTriple::classical(Coefficient::Zero);
        let bd = BoundaryData::new(&t, rho_b, rho_b).unwrap();
        let spec = NoiseSpec::default();
        Dynamics::new(
            Grid::new(0.0, 1.0, 16).unwrap(),
            t,
            noise.then_some(&spec),
            bd,
            CutoffParams::default(),
        )
        .unwrap()
    }

    fn params() -> SolverParams {
        SolverParams::new(0.25, CutoffParams::default(), 1.0, vec![1.0]).unwrap()
    }

    #[test]
    fn heat_death_without_noise() {
        let d = dynamics(0.0, false);
        let init = DensityState::from_fn(d.grid(), |x| (PI * x).sin()).unwrap();
        let s = invariant_sampler(&d, &params(), &[init], 2.0, 3.0, 2, 1).unwrap();
        for o in s.at_sample(0) {
            assert!(o.mass < 1e-10 && o.max < 1e-10);
        }
        assert_eq!(s.records.len(), 4);
    }

    #[test]
    fn constant_boundary_data_is_the_limit() {
        let d = dynamics(1.0, false);
        let init = DensityState::from_fn(d.grid(), |x| 3.0 * x).unwrap();
        let s = invariant_sampler(&d, &params(), &[init], 2.0, 3.0, 1, 1).unwrap();
        assert!(s.mean_profiles[0].iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn noisy_initials_forget_their_start() {
        let d = dynamics(1.0, true);
        let a = DensityState::new(vec![1.0; 16]).unwrap();
        let b = DensityState::from_fn(d.grid(), |x| 1.0 + (PI * x).sin()).unwrap();
        let s = invariant_sampler(&d, &params(), &[a, b], 0.5, 1.0, 6, 9).unwrap();
        let ma: Vec<f64> = s.at_sample(0).iter().map(|o| o.mass).collect();
        let mb: Vec<f64> = s.at_sample(1).iter().map(|o| o.mass).collect();
        let burn: Vec<f64> = s
            .records
            .iter()
            .filter(|r| r.time == 0.5)
            .map(|r| r.obs.mass)
            .collect();
        assert_eq!(burn.len(), 12);
        assert!(w1_scalar(&ma, &mb).unwrap() < 1e-2);
    }

    #[test]
    fn rejects_inverted_times() {
        let d = dynamics(0.0, false);
        let init = DensityState::new(vec![0.0; 16]).unwrap();
        assert!(invariant_sampler(&d, &params(), &[init], 2.0, 1.0, 1, 0).is_err());
    }
}
