//! `qkeep` — command-line front end for the quantum-memory Monte Carlo
//! simulator.
//!
//! Subcommands:
//!
//! * `run` — one memory experiment from a JSON config; writes `trace.csv`,
//!   `events.csv` and `summary.json`.
//! * `sweep` — corrected vs uncorrected storage over an `eps_step` grid; one
//!   result set per grid point and arm, plus a combined `comparison.csv`.
//! * `exercise` — probability-vs-amplitude table for a rotated qubit.
//! * `scaling` — GHZ dephasing rate versus register size.
//!
//! Exit codes: 0 success (including physically "negative" findings), 2
//! configuration error, 3 capacity error, 4 I/O error.

mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{CliError, ConfigFile};
use qkeep_core::{
    compare_point, dephasing_scaling_experiment, fit_exponential,
    probability_vs_amplitude_exercise, run_experiment, CodeChoice, ExerciseAxis, RunConfig,
    RunMode,
};

#[derive(Parser)]
#[command(
    name = "qkeep",
    version,
    about = "Monte Carlo simulator for an error-corrected qubit memory with no ideal elements"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one memory experiment from a JSON config file.
    Run(RunArgs),
    /// Compare corrected vs uncorrected storage over an eps_step grid.
    Sweep(SweepArgs),
    /// Print the probability-vs-amplitude readout exercise.
    Exercise(ExerciseArgs),
    /// Measure GHZ dephasing rate versus register size.
    Scaling(ScalingArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master RNG seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Cap worker threads (default: machine cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory (else config out_dir, then $QK_OUT_DIR, then ./qkeep-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the run mode; "uncorrected" also clears the code.
    #[arg(long, value_enum, value_name = "MODE")]
    mode: Option<ModeArg>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// JSON config file; must contain a sweep section with eps_grid.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master RNG seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Override the number of trials per run.
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Cap worker threads (default: machine cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory (else config out_dir, then $QK_OUT_DIR, then ./qkeep-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the run mode of the corrected arm.
    #[arg(long, value_enum, value_name = "MODE")]
    mode: Option<ModeArg>,
}

#[derive(clap::Args)]
struct ExerciseArgs {
    /// Polar angle of the prepared state cos(theta)|0> + sin(theta)|1>.
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    /// Rotation axis applied before readout.
    #[arg(long, value_enum, default_value = "y")]
    axis: AxisArg,
    /// Rotation angle.
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(clap::Args)]
struct ScalingArgs {
    /// Largest register size to measure.
    #[arg(long, default_value_t = 8, value_name = "N")]
    n_max: usize,
    /// Per-step RMS kick angle.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Steps to evolve each register for.
    #[arg(long, default_value_t = 400)]
    steps: u32,
    /// Trials per register size.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Master RNG seed.
    #[arg(long, default_value_t = 1, value_name = "U64")]
    seed: u64,
    /// Cap worker threads (default: machine cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Output directory for scaling.csv (else $QK_OUT_DIR, then ./qkeep-out).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    #[value(name = "continuous")]
    Continuous,
    #[value(name = "discrete_baseline")]
    DiscreteBaseline,
    #[value(name = "uncorrected")]
    Uncorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AxisArg {
    #[value(name = "x")]
    X,
    #[value(name = "y")]
    Y,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Exercise(args) => cmd_exercise(args),
        Command::Scaling(args) => cmd_scaling(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    Ok(())
}

fn resolve_out_dir(flag: Option<PathBuf>, from_config: Option<PathBuf>) -> PathBuf {
    flag.or(from_config)
        .or_else(|| std::env::var_os("QK_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("qkeep-out"))
}

fn apply_overrides(
    run: &mut RunConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    mode: Option<ModeArg>,
) {
    if let Some(seed) = seed {
        run.master_seed = seed;
    }
    if let Some(trials) = trials {
        run.trials = trials;
    }
    if let Some(mode) = mode {
        run.mode = match mode {
            ModeArg::Continuous => RunMode::Continuous,
            ModeArg::DiscreteBaseline => RunMode::DiscreteBaseline,
            ModeArg::Uncorrected => RunMode::Uncorrected,
        };
        // The control arm stores a bare qubit; dropping the code here lets
        // one config file serve both arms of a comparison.
        if run.mode == RunMode::Uncorrected {
            run.code = CodeChoice::None;
        }
    }
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    configure_threads(args.threads)?;
    let file = ConfigFile::load(&args.config)?;
    let mut cfg = file.run;
    apply_overrides(&mut cfg, args.seed, args.trials, args.mode);
    cfg.validate()?;
    let out_dir = resolve_out_dir(args.out, file.out_dir);

    let result = run_experiment(&cfg)?;
    let fit = fit_exponential(
        &result.mean_fidelity,
        result.mean_steps_per_round.unwrap_or(1.0),
    );
    output::write_run_outputs(&out_dir, &result, &fit)?;

    println!(
        "run: code {} | mode {} | {} trials | seed {}",
        output::code_name(cfg.code),
        output::mode_name(cfg.mode),
        cfg.trials,
        cfg.master_seed
    );
    println!(
        "final mean fidelity {} | crashes {}",
        result.mean_fidelity.last().copied().unwrap_or(f64::NAN),
        result.total_crashes
    );
    println!("decay: {}", output::fit_text(&fit));
    for name in ["trace.csv", "events.csv", "summary.json"] {
        println!("wrote {}", out_dir.join(name).display());
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    configure_threads(args.threads)?;
    let file = ConfigFile::load(&args.config)?;
    let sweep = file.sweep.clone().ok_or_else(|| {
        CliError::Config("sweep command needs a \"sweep\" section with an eps_grid".into())
    })?;
    if sweep.eps_grid.is_empty() {
        return Err(CliError::Config("sweep.eps_grid must not be empty".into()));
    }
    let mut base = file.run;
    apply_overrides(&mut base, args.seed, args.trials, args.mode);
    base.validate()?;
    let out_dir = resolve_out_dir(args.out, file.out_dir);
    output::create_dir(&out_dir)?;

    let mut rows = Vec::new();
    let mut log = Vec::new();
    let mut first_failure: Option<CliError> = None;
    for &eps in &sweep.eps_grid {
        match compare_point(&base, eps) {
            Ok(point) => {
                let point_dir = out_dir.join(format!("eps_{eps}"));
                output::write_run_outputs(
                    &point_dir.join("corrected"),
                    &point.corrected_run,
                    &point.row.corrected,
                )?;
                output::write_run_outputs(
                    &point_dir.join("uncorrected"),
                    &point.uncorrected_run,
                    &point.row.uncorrected,
                )?;
                log.push((eps, "completed", String::new()));
                rows.push(point.row);
            }
            Err(err) => {
                // One bad grid point must not discard the rest of the sweep;
                // record it and keep going.
                let err: CliError = err.into();
                eprintln!("warning: eps {eps}: {err}");
                log.push((eps, "failed", err.to_string()));
                first_failure.get_or_insert(err);
            }
        }
    }
    output::write_comparison_csv(&out_dir.join("comparison.csv"), &rows)?;
    output::write_sweep_log(&out_dir.join("sweep_log.csv"), &log)?;

    for row in &rows {
        let gain = row
            .gain
            .map(|g| g.to_string())
            .unwrap_or_else(|| "undefined".into());
        println!(
            "eps {}: corrected {} | uncorrected {} | gain {}",
            row.eps_step,
            output::fit_text(&row.corrected),
            output::fit_text(&row.uncorrected),
            gain
        );
    }
    println!("wrote {}", out_dir.join("comparison.csv").display());
    if rows.is_empty() {
        // Every point failed: surface the first failure as the exit status.
        return Err(first_failure.unwrap_or_else(|| CliError::Internal("empty sweep".into())));
    }
    Ok(())
}

fn cmd_exercise(args: ExerciseArgs) -> Result<(), CliError> {
    let axis = match args.axis {
        AxisArg::X => ExerciseAxis::X,
        AxisArg::Y => ExerciseAxis::Y,
    };
    let ex = probability_vs_amplitude_exercise(args.theta, axis, args.beta)?;
    println!("theta       = {}", ex.theta);
    println!("beta        = {}", ex.beta);
    println!(
        "axis        = {}",
        match axis {
            ExerciseAxis::X => "x",
            ExerciseAxis::Y => "y",
        }
    );
    println!("p_mixture   = {}", ex.p_mixture);
    println!("p_amplitude = {}", ex.p_amplitude);
    println!("difference  = {}", ex.difference);
    Ok(())
}

fn cmd_scaling(args: ScalingArgs) -> Result<(), CliError> {
    configure_threads(args.threads)?;
    let result =
        dephasing_scaling_experiment(args.n_max, args.eps, args.steps, args.trials, args.seed)?;

    println!("N    rate           rate_stderr    model");
    for point in &result.points {
        println!(
            "{:<4} {:<14e} {:<14e} {}",
            point.n_qubits,
            point.fit.rate,
            point.fit.rate_stderr,
            output::model_name(point.fit.model)
        );
    }
    match result.rate_vs_n_slope {
        Some(slope) => println!("rate-vs-N slope: {slope}"),
        None => println!("rate-vs-N slope: undefined (needs two fitted sizes)"),
    }

    let out_dir = resolve_out_dir(args.out, None);
    output::create_dir(&out_dir)?;
    let path = out_dir.join("scaling.csv");
    output::write_scaling_csv(&path, &result)?;
    println!("wrote {}", path.display());
    Ok(())
}
