use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dklab::{load_config, replay, run, Experiment, LabError, LabResult, Outcome, RunReport};

const OUTPUT_DIR_ENV: &str = "DKLAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "dklab",
    version,
    about = "Dean-Kawasaki ergodicity experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled-pair ensemble and weighted contraction curve.
    RunContraction(RunArgs),
    /// Contraction ensemble plus exponential and polynomial decay fits.
    RunDecayFit(RunArgs),
    /// Observable laws from several initial conditions after burn-in.
    RunInvariant(RunArgs),
    /// Constructs the weight function and reports its per-cell slacks.
    VerifyWeight(RunArgs),
    /// Checks the structural assumptions on the coefficients.
    CheckAssumptions(RunArgs),
    /// Deterministic heat flow against the exact decay factor.
    HeatOracle(RunArgs),
    /// Re-runs a manifest and checks the CSVs are byte-identical.
    Replay {
        /// Path to manifest.toml of a previous run.
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    config: PathBuf,
    /// Output directory. Without it the config's output_dir is used, then
    /// $DKLAB_OUTPUT_DIR, then ./output.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Base seed (overrides the config's base_seed).
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(experiment: Experiment, args: &RunArgs) -> LabResult<RunReport> {
    let mut config = load_config(&args.config)?;
    match config.experiment {
        Some(e) if e != experiment => {
            return Err(LabError::config(
                "experiment",
                format!(
                    "config is for `{}`, subcommand runs `{}`",
                    e.name(),
                    experiment.name()
                ),
            ))
        }
        _ => config.experiment = Some(experiment),
    }
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    // flag, then config, then the environment default, then ./output
    let dir = args
        .output_dir
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"));
    config.output_dir = Some(dir.clone());
    run(&config, &dir)
}

fn summary(report: &RunReport) -> serde_json::Value {
    use serde_json::json;
    let extra = match &report.outcome {
        Outcome::Contraction(c) => json!({
            "super_constant": c.super_constant,
            "max_l1_ratio": c.max_l1_ratio,
        }),
        Outcome::DecayFit(d) => json!({
            "preferred": d.preferred().name(),
            "r_squared_exponential": d.exponential.r_squared,
            "r_squared_polynomial": d.polynomial.r_squared,
        }),
        Outcome::Invariant(i) => json!({ "records": i.samples.records.len() }),
        Outcome::VerifyWeight(w) => json!({ "alpha": w.weight.alpha() }),
        Outcome::CheckAssumptions(r) => json!({ "checks": r.checks.len() }),
        Outcome::HeatOracle(h) => json!({
            "max_rel_error": h.rows.iter().map(|r| r.rel_error).fold(0.0, f64::max),
        }),
    };
    json!({
        "status": "ok",
        "experiment": report.manifest.experiment.name(),
        "output_dir": report.output_dir,
        "wall_time_s": report.manifest.wall_time_s,
        "result": extra,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunContraction(a) => execute(Experiment::Contraction, a),
        Command::RunDecayFit(a) => execute(Experiment::DecayFit, a),
        Command::RunInvariant(a) => execute(Experiment::Invariant, a),
        Command::VerifyWeight(a) => execute(Experiment::VerifyWeight, a),
        Command::CheckAssumptions(a) => execute(Experiment::CheckAssumptions, a),
        Command::HeatOracle(a) => execute(Experiment::HeatOracle, a),
        Command::Replay { manifest } => replay(manifest),
    };
    match result {
        Ok(report) => {
            println!("{}", summary(&report));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
