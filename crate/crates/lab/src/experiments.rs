//! The canonical experiments. Each one computes in memory, then writes its
//! CSVs from a single thread.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dklab_core::ergodicity::{
    contraction_curve, estimate_super_constant, fit_exponential, fit_polynomial, sample_path,
    w1_scalar, ContractionCurve, DecayFit, DecayModel, ObservableSamples, PathSummary,
};
use dklab_core::nonlinear::AssumptionReport;
use dklab_core::weight::CellSlacks;
use dklab_core::{Coefficient, NoiseField, PathRng, Regime, Trajectory, WeightFunction};

use crate::config::{Experiment, ProfileConfig, Resolved, RunConfig};
use crate::ensemble::run_indexed;
use crate::error::{LabError, LabResult};
use crate::manifest::Manifest;
use crate::output::{self, *};

/// Coupled-pair ensemble and its weighted contraction curve.
#[derive(Debug, Clone)]
pub struct ContractionOutcome {
    pub weight: WeightFunction,
    pub paths: Vec<PathSummary>,
    pub curve: ContractionCurve,
    pub super_constant: f64,
    pub max_l1_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct DecayOutcome {
    pub contraction: ContractionOutcome,
    pub exponential: DecayFit,
    pub polynomial: DecayFit,
}

impl DecayOutcome {
    /// The model with the larger R².
    pub fn preferred(&self) -> &DecayFit {
        if self.exponential.r_squared >= self.polynomial.r_squared {
            &self.exponential
        } else {
            &self.polynomial
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvariantOutcome {
    pub samples: ObservableSamples,
    /// W1 between the observable laws of each initial and initial 0, at
    /// t_burn and t_sample.
    pub distances: Vec<InvariantDistanceRow>,
}

#[derive(Debug, Clone)]
pub struct WeightOutcome {
    pub weight: WeightFunction,
    pub slacks: CellSlacks,
}

#[derive(Debug, Clone)]
pub struct HeatOutcome {
    pub rows: Vec<HeatRow>,
}

#[derive(Debug, Clone)]
pub enum Outcome {
    Contraction(ContractionOutcome),
    DecayFit(DecayOutcome),
    Invariant(InvariantOutcome),
    VerifyWeight(WeightOutcome),
    CheckAssumptions(AssumptionReport),
    HeatOracle(HeatOutcome),
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    pub outcome: Outcome,
}

/// Runs `config` into `output_dir`: the experiment's CSVs plus
/// `manifest.toml`. A failed assumption check still writes its report before
/// returning the error.
pub fn run(config: &RunConfig, output_dir: &Path) -> LabResult<RunReport> {
    let experiment = config
        .experiment
        .ok_or_else(|| LabError::config("experiment", "no experiment selected"))?;
    let start = Instant::now();
    let resolved = config.resolve()?;
    output::ensure_dir(output_dir)?;
    let (outcome, files, failure) = match experiment {
        Experiment::Contraction => {
            let c = contraction(&resolved)?;
            let files = write_contraction(output_dir, &c)?;
            (Outcome::Contraction(c), files, None)
        }
        Experiment::DecayFit => {
            let d = decay_fit(&resolved)?;
            let mut files = write_contraction(output_dir, &d.contraction)?;
            files.push(write_fit(output_dir, &d)?);
            (Outcome::DecayFit(d), files, None)
        }
        Experiment::Invariant => {
            let inv = invariant(&resolved)?;
            let files = write_invariant(output_dir, &resolved, &inv)?;
            (Outcome::Invariant(inv), files, None)
        }
        Experiment::VerifyWeight => {
            let w = verify_weight(&resolved)?;
            let files = vec![write_weight(output_dir, &resolved, &w)?];
            (Outcome::VerifyWeight(w), files, None)
        }
        Experiment::CheckAssumptions => {
            let report = check_assumptions(&resolved)?;
            let files = vec![write_assumptions(output_dir, &report)?];
            let failure = (!report.passed()).then(|| {
                let names: Vec<&str> = report.failures().map(|c| c.name).collect();
                LabError::Assumption(names.join(", "))
            });
            (Outcome::CheckAssumptions(report), files, failure)
        }
        Experiment::HeatOracle => {
            let h = heat_oracle(&resolved)?;
            let files = vec![output::write_csv(output_dir, HEAT_ORACLE, &h.rows)?];
            (Outcome::HeatOracle(h), files, None)
        }
    };
    let manifest = Manifest {
        dklab_version: env!("CARGO_PKG_VERSION").into(),
        core_version: dklab_core::VERSION.into(),
        experiment,
        base_seed: resolved.config.base_seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        primary_csvs: files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config: resolved.config.clone(),
    };
    manifest.write(&output_dir.join(MANIFEST))?;
    if let Some(err) = failure {
        return Err(err);
    }
    Ok(RunReport {
        output_dir: output_dir.to_path_buf(),
        manifest,
        outcome,
    })
}

/// Re-runs the manifest in `<dir>/.replay/` and checks that every primary
/// CSV is byte-identical to the original.
pub fn replay(manifest_path: &Path) -> LabResult<RunReport> {
    let manifest = Manifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let replay_dir = dir.join(".replay");
    let mut config = manifest.config.clone();
    config.experiment = Some(manifest.experiment);
    config.base_seed = manifest.base_seed;
    config.output_dir = Some(replay_dir.clone());
    let report = match run(&config, &replay_dir) {
        Err(LabError::Assumption(_)) if manifest.experiment == Experiment::CheckAssumptions => None,
        other => Some(other?),
    };
    for name in &manifest.primary_csvs {
        if let Some(diff) = output::first_difference(&dir.join(name), &replay_dir.join(name))? {
            return Err(LabError::ReplayDivergence {
                file: name.clone(),
                row: diff.row,
                expected: diff.expected,
                actual: diff.actual,
            });
        }
    }
    report
        .ok_or_else(|| LabError::Assumption("replayed assumption check failed as recorded".into()))
}

fn noise_field(r: &Resolved) -> LabResult<NoiseField> {
    Ok(NoiseField::build(&r.noise, &r.grid)?)
}

fn build_weight(r: &Resolved) -> LabResult<(NoiseField, WeightFunction)> {
    let field = noise_field(r)?;
    let w = &r.config.weight;
    let weight = WeightFunction::construct(&field, &r.grid, r.c_link, w.margin)?;
    Ok((field, weight))
}

fn pair_initials(
    r: &Resolved,
) -> LabResult<(&dklab_core::DensityState, &dklab_core::DensityState)> {
    match r.initials.as_slice() {
        [a, b] => Ok((a, b)),
        other => Err(LabError::config(
            "initial.profiles",
            format!("coupled runs need exactly 2 profiles, got {}", other.len()),
        )),
    }
}

/// Runs `ensemble.paths` synchronously coupled pairs; path p draws its noise
/// from the seed derived from (base_seed, p).
pub fn contraction(r: &Resolved) -> LabResult<ContractionOutcome> {
    let (first, second) = pair_initials(r)?;
    if r.config.ensemble.paths < 2 {
        return Err(LabError::config(
            "ensemble.paths",
            "contraction needs at least 2 paths",
        ));
    }
    let (_, weight) = build_weight(r)?;
    let dynamics = r.dynamics()?;
    let seed = r.config.base_seed;
    let paths = run_indexed(
        r.config.ensemble.paths,
        r.config.ensemble.parallelism,
        |p| {
            let mut summary = PathSummary::with_capacity(r.params.save_times.len());
            let mut failed = None;
            dynamics.run_coupled(
                first,
                second,
                &r.params,
                &mut PathRng::for_path(seed, p as u64),
                |a, b| {
                    if failed.is_none() {
                        if let Err(e) =
                            summary.record(a.time, &a.rho, &b.rho, &weight, &r.triple, &r.grid)
                        {
                            failed = Some(e);
                        }
                    }
                },
            )?;
            match failed {
                Some(e) => Err(e.into()),
                None => Ok(summary),
            }
        },
    )?;
    let curve = contraction_curve(&paths)?;
    let super_constant = estimate_super_constant(&curve);
    let max_l1_ratio = paths
        .iter()
        .map(PathSummary::max_l1_ratio)
        .fold(0.0, f64::max);
    Ok(ContractionOutcome {
        weight,
        paths,
        curve,
        super_constant,
        max_l1_ratio,
    })
}

pub fn decay_fit(r: &Resolved) -> LabResult<DecayOutcome> {
    let contraction = contraction(r)?;
    let window = r.fit_window();
    let c = &contraction.curve;
    let q0 = r.triple.q0();
    let exponential = fit_exponential(&c.times, &c.mean_l1w, window)?.with_gap_exponent(q0);
    let polynomial = fit_polynomial(&c.times, &c.mean_l1w, window)?.with_gap_exponent(q0);
    Ok(DecayOutcome {
        contraction,
        exponential,
        polynomial,
    })
}

pub fn invariant(r: &Resolved) -> LabResult<InvariantOutcome> {
    let inv = &r.config.invariant;
    let (t_burn, t_sample) = (inv.t_burn, inv.t_sample);
    if !(t_burn >= 0.0 && t_burn < t_sample) {
        return Err(LabError::config(
            "invariant",
            format!("need 0 <= t_burn < t_sample, got {t_burn} and {t_sample}"),
        ));
    }
    let dynamics = r.dynamics()?;
    let n_paths = r.config.ensemble.paths;
    let n_init = r.initials.len();
    let trajectories: Vec<Trajectory> =
        run_indexed(n_init * n_paths, r.config.ensemble.parallelism, |job| {
            let (i, p) = (job / n_paths, job % n_paths);
            Ok(sample_path(
                &dynamics,
                &r.params,
                &r.initials[i],
                t_burn,
                t_sample,
                r.config.base_seed,
                p,
            )?)
        })?;
    let samples = ObservableSamples::collect(
        &r.grid,
        n_init,
        t_burn,
        t_sample,
        trajectories
            .iter()
            .enumerate()
            .map(|(job, t)| (job / n_paths, job % n_paths, t)),
    )?;
    let law = |i: usize, t: f64, f: fn(&dklab_core::ergodicity::Observables) -> f64| -> Vec<f64> {
        samples
            .records
            .iter()
            .filter(|rec| rec.initial_id == i && rec.time == t)
            .map(|rec| f(&rec.obs))
            .collect()
    };
    let mut distances = Vec::new();
    for i in 1..n_init {
        for t in [t_burn, t_sample] {
            distances.push(InvariantDistanceRow {
                initial_id: i,
                time: t,
                w1_mass: w1_scalar(&law(0, t, |o| o.mass), &law(i, t, |o| o.mass))?,
                w1_l2: w1_scalar(&law(0, t, |o| o.l2), &law(i, t, |o| o.l2))?,
                w1_max: w1_scalar(&law(0, t, |o| o.max), &law(i, t, |o| o.max))?,
            });
        }
    }
    Ok(InvariantOutcome { samples, distances })
}

pub fn verify_weight(r: &Resolved) -> LabResult<WeightOutcome> {
    let (field, weight) = build_weight(r)?;
    let slacks = weight.cell_slacks(&field, &r.grid, r.c_link)?;
    Ok(WeightOutcome { weight, slacks })
}

pub fn check_assumptions(r: &Resolved) -> LabResult<AssumptionReport> {
    Ok(r.triple
        .check_assumptions(&r.config.assumptions.sample_grid(), &r.cut)?)
}

/// Deterministic heat flow from a single sine mode against its exact decay
/// factor exp(−(kπ/L)²t).
pub fn heat_oracle(r: &Resolved) -> LabResult<HeatOutcome> {
    if r.triple.regime() != Regime::Classical
        || !matches!(r.triple.nu_coefficient(), Coefficient::Zero)
    {
        return Err(LabError::config(
            "nonlinear",
            "heat oracle needs the classical regime with nu = 0",
        ));
    }
    if r.noise_enabled {
        return Err(LabError::config(
            "noise.enabled",
            "heat oracle needs the noise switched off",
        ));
    }
    if r.boundary.rho_b_left != 0.0 || r.boundary.rho_b_right != 0.0 {
        return Err(LabError::config(
            "boundary",
            "heat oracle needs zero boundary data",
        ));
    }
    let freq = match r.config.initial.profiles.as_slice() {
        [ProfileConfig::Sine {
            offset,
            amplitude,
            freq,
        }] if *offset == 0.0 && *amplitude != 0.0 => *freq,
        _ => {
            return Err(LabError::config(
                "initial.profiles",
                "heat oracle needs a single sine profile with zero offset",
            ))
        }
    };
    let dynamics = r.dynamics()?;
    let initial = &r.initials[0];
    let sup = |rho: &[f64]| rho.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sup0 = sup(&initial.rho);
    let traj = dynamics.simulate(
        initial,
        &r.params,
        &mut PathRng::for_path(r.config.base_seed, 0),
    )?;
    let rate = (freq as f64 * PI / r.grid.width()).powi(2);
    let rows = traj
        .states
        .iter()
        .map(|s| {
            let ratio = sup(&s.rho) / sup0;
            let predicted = (-rate * s.time).exp();
            HeatRow {
                time: s.time,
                sup_norm: sup(&s.rho),
                ratio,
                predicted,
                rel_error: (ratio - predicted).abs() / predicted,
            }
        })
        .collect();
    Ok(HeatOutcome { rows })
}

fn write_contraction(dir: &Path, c: &ContractionOutcome) -> LabResult<Vec<PathBuf>> {
    let rows = c.paths.iter().enumerate().flat_map(|(p, s)| {
        (0..s.times.len()).map(move |k| PathRow {
            time: s.times[k],
            path: p,
            l1w_diff: s.l1w[k],
            l1_diff: s.l1[k],
            mass_1: s.mass1[k],
            mass_2: s.mass2[k],
        })
    });
    let paths = output::write_csv(dir, CONTRACTION_PATHS, rows)?;
    let cv = &c.curve;
    let curve = output::write_csv(
        dir,
        CONTRACTION_CURVE,
        (0..cv.len()).map(|k| CurveRow {
            time: cv.times[k],
            mean: cv.mean_l1w[k],
            stderr: cv.stderr[k],
            gap_integral: cv.cum_gap_integral[k],
        }),
    )?;
    let (c_low, c_up) = c.weight.equivalence_constants();
    let summary = output::write_csv(
        dir,
        CONTRACTION_SUMMARY,
        [
            SummaryRow {
                quantity: "paths",
                value: cv.n_paths as f64,
            },
            SummaryRow {
                quantity: "super_constant",
                value: c.super_constant,
            },
            SummaryRow {
                quantity: "max_l1_ratio",
                value: c.max_l1_ratio,
            },
            SummaryRow {
                quantity: "max_mean_increase",
                value: cv.max_increase(),
            },
            SummaryRow {
                quantity: "weight_alpha",
                value: c.weight.alpha(),
            },
            SummaryRow {
                quantity: "c_low",
                value: c_low,
            },
            SummaryRow {
                quantity: "c_up",
                value: c_up,
            },
        ],
    )?;
    Ok(vec![paths, curve, summary])
}

fn fit_row(fit: &DecayFit, preferred: bool) -> FitRow {
    let (prefactor, parameter) = match fit.model {
        DecayModel::Exponential { c1, c2 } => (c1, c2),
        DecayModel::Polynomial { c, p } => (c, p),
    };
    FitRow {
        model: fit.name(),
        prefactor,
        parameter,
        r_squared: fit.r_squared,
        window_lo: fit.window.0,
        window_hi: fit.window.1,
        n_points: fit.n_points,
        q_star: fit.q_star,
        preferred,
    }
}

fn write_fit(dir: &Path, d: &DecayOutcome) -> LabResult<PathBuf> {
    let exp_wins = d.exponential.r_squared >= d.polynomial.r_squared;
    output::write_csv(
        dir,
        FIT_REPORT,
        [
            fit_row(&d.exponential, exp_wins),
            fit_row(&d.polynomial, !exp_wins),
        ],
    )
}

fn write_invariant(dir: &Path, r: &Resolved, inv: &InvariantOutcome) -> LabResult<Vec<PathBuf>> {
    let obs = output::write_csv(
        dir,
        OBSERVABLES,
        inv.samples.records.iter().map(|rec| ObservableRow {
            path: rec.path,
            initial_id: rec.initial_id,
            time: rec.time,
            mass: rec.obs.mass,
            l2: rec.obs.l2,
            max: rec.obs.max,
        }),
    )?;
    let dist = output::write_csv(dir, INVARIANT_DISTANCES, &inv.distances)?;
    let x = r.grid.centers();
    let states = output::write_csv(
        dir,
        STATES,
        inv.samples
            .mean_profiles
            .iter()
            .enumerate()
            .flat_map(|(i, prof)| {
                prof.iter().enumerate().map(move |(cell, &v)| StateRow {
                    initial_id: i,
                    cell,
                    x: x[cell],
                    rho_mean: v,
                })
            }),
    )?;
    Ok(vec![obs, dist, states])
}

fn write_weight(dir: &Path, r: &Resolved, w: &WeightOutcome) -> LabResult<PathBuf> {
    let x = r.grid.centers();
    let (v, g, l) = (w.weight.values(), w.weight.gradient(), w.weight.laplacian());
    let s = &w.slacks;
    output::write_csv(
        dir,
        WEIGHT,
        (0..x.len()).map(|i| WeightRow {
            cell: i,
            x: x[i],
            w: v[i],
            dw: g[i],
            lapw: l[i],
            slack1: s.laplacian[i],
            slack2: s.gradient[i],
            slack3: s.combined[i],
        }),
    )
}

fn write_assumptions(dir: &Path, report: &AssumptionReport) -> LabResult<PathBuf> {
    output::write_csv(
        dir,
        ASSUMPTIONS,
        report.checks.iter().map(|c| AssumptionRow {
            name: c.name,
            constant: c.constant,
            passed: c.passed(),
            xi1: c
                .violation
                .as_ref()
                .map(|w| w.xi1)
                .filter(|v| v.is_finite()),
            xi2: c.violation.as_ref().and_then(|w| w.xi2),
            detail: c.violation.as_ref().map_or("", |w| w.detail.as_str()),
        }),
    )
}
