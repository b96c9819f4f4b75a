//! Result-file writers: bulk CSV traces, event logs, and summary JSON.
//!
//! Floats are written through Rust's shortest-round-trip formatting and JSON
//! objects through `serde_json` with a fixed field order, so rerunning the
//! same config and seed produces byte-identical files.

use qkeep_core::{
    CodeChoice, ComparisonRow, DecayFit, FitModel, RunConfig, RunMode, RunResult, ScalingResult,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::CliError;

/// RNG contract recorded in every summary: generator family plus stream
/// discipline. Bit-exact reproduction is promised only within this
/// implementation; other implementations can match at the statistical level.
const RNG_DESCRIPTION: &str = "ChaCha12; trial i runs on stream i of the master seed";

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
}

pub fn code_name(code: CodeChoice) -> &'static str {
    match code {
        CodeChoice::None => "none",
        CodeChoice::Bitflip3 => "bitflip3",
        CodeChoice::Steane7 => "steane7",
    }
}

pub fn mode_name(mode: RunMode) -> &'static str {
    match mode {
        RunMode::Continuous => "continuous",
        RunMode::DiscreteBaseline => "discrete_baseline",
        RunMode::Uncorrected => "uncorrected",
    }
}

pub fn model_name(model: FitModel) -> &'static str {
    match model {
        FitModel::Exponential => "exponential",
        FitModel::NoneDetected => "none_detected",
    }
}

/// Human-readable one-liner for a decay fit.
pub fn fit_text(fit: &DecayFit) -> String {
    match fit.model {
        FitModel::Exponential => format!(
            "rate {:e} +/- {:e} per step (fit window {}..{})",
            fit.rate, fit.rate_stderr, fit.window.0, fit.window.1
        ),
        FitModel::NoneDetected => "none detected (window too short or not decaying)".into(),
    }
}

/// Quotes a CSV field if it contains separators or quotes.
fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

// ---------------------------------------------------------------------------
// Per-run result set: trace.csv, events.csv, summary.json
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Summary<'a> {
    /// Version of the code that produced this file.
    version: &'static str,
    /// Random-number generator family and stream discipline.
    rng: &'static str,
    master_seed: u64,
    /// Exact configuration executed; re-parsing this object yields an equal
    /// configuration.
    config: &'a RunConfig,
    trials_completed: u64,
    total_crashes: u64,
    total_ancillas: u64,
    mean_steps_per_round: Option<f64>,
    final_mean_fidelity: Option<f64>,
    decay_fit: &'a DecayFit,
    mean_fidelity: &'a [f64],
    std_fidelity: &'a [f64],
    alive: &'a [u64],
    crash_round_counts: &'a [u64],
}

/// Writes the full result set for one run into `dir`.
pub fn write_run_outputs(dir: &Path, result: &RunResult, fit: &DecayFit) -> Result<(), CliError> {
    create_dir(dir)?;
    write_file(&dir.join("trace.csv"), &trace_csv(result))?;
    write_file(&dir.join("events.csv"), &events_csv(result))?;
    write_file(&dir.join("summary.json"), &summary_json(result, fit)?)?;
    Ok(())
}

fn trace_csv(result: &RunResult) -> String {
    let mut out = String::from("trial,round,fidelity,accepted_syndrome,elapsed_steps\n");
    for trial in &result.trials {
        for (round, (fidelity, steps)) in trial
            .fidelities
            .iter()
            .zip(&trial.elapsed_steps)
            .enumerate()
        {
            // Round 0 is the post-encoding record; no syndrome was accepted
            // yet. Uncorrected runs have no syndromes at all.
            let syndrome = if round == 0 {
                ""
            } else {
                trial
                    .syndromes
                    .get(round - 1)
                    .map(String::as_str)
                    .unwrap_or("")
            };
            let _ = writeln!(out, "{},{round},{fidelity},{syndrome},{steps}", trial.trial);
        }
    }
    out
}

fn events_csv(result: &RunResult) -> String {
    let mut out = String::from("trial,round,kind,detail\n");
    for trial in &result.trials {
        for event in &trial.events {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                event.trial,
                event.round,
                event.kind.label(),
                csv_quote(&event.kind.detail())
            );
        }
    }
    out
}

fn summary_json(result: &RunResult, fit: &DecayFit) -> Result<String, CliError> {
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        rng: RNG_DESCRIPTION,
        master_seed: result.config.master_seed,
        config: &result.config,
        trials_completed: result.trials.len() as u64,
        total_crashes: result.total_crashes,
        total_ancillas: result.total_ancillas,
        mean_steps_per_round: result.mean_steps_per_round,
        final_mean_fidelity: result.mean_fidelity.last().copied(),
        decay_fit: fit,
        mean_fidelity: &result.mean_fidelity,
        std_fidelity: &result.std_fidelity,
        alive: &result.alive,
        crash_round_counts: &result.crash_round_counts,
    };
    let mut text = serde_json::to_string_pretty(&summary)
        .map_err(|e| CliError::Internal(format!("serializing summary: {e}")))?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// Sweep outputs
// ---------------------------------------------------------------------------

/// Writes the combined corrected-vs-uncorrected table.
pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<(), CliError> {
    let mut out = String::from(
        "eps_step,corrected_rate,corrected_rate_stderr,corrected_model,\
         uncorrected_rate,uncorrected_rate_stderr,uncorrected_model,gain\n",
    );
    for row in rows {
        let gain = row
            .gain
            .map(|g| g.to_string())
            .unwrap_or_else(|| "undefined".into());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.eps_step,
            row.corrected.rate,
            row.corrected.rate_stderr,
            model_name(row.corrected.model),
            row.uncorrected.rate,
            row.uncorrected.rate_stderr,
            model_name(row.uncorrected.model),
            gain
        );
    }
    write_file(path, &out)
}

/// One line per grid point, recording whether it completed or failed.
pub fn write_sweep_log(path: &Path, lines: &[(f64, &str, String)]) -> Result<(), CliError> {
    let mut out = String::from("eps_step,status,detail\n");
    for (eps, status, detail) in lines {
        let _ = writeln!(out, "{eps},{status},{}", csv_quote(detail));
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// Scaling output
// ---------------------------------------------------------------------------

/// Rate-vs-size table. Sizes whose fit found no decay leave the numeric
/// cells empty rather than writing a misleading zero.
pub fn write_scaling_csv(path: &Path, result: &ScalingResult) -> Result<(), CliError> {
    let mut out = String::from("N,rate,rate_stderr\n");
    for point in &result.points {
        match point.fit.model {
            FitModel::Exponential => {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    point.n_qubits, point.fit.rate, point.fit.rate_stderr
                );
            }
            FitModel::NoneDetected => {
                let _ = writeln!(out, "{},,", point.n_qubits);
            }
        }
    }
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting_escapes_separators_and_quotes() {
        assert_eq!(csv_quote("plain"), "plain");
        assert_eq!(csv_quote("a,b"), "\"a,b\"");
        assert_eq!(csv_quote("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn enum_names_are_config_file_spellings() {
        assert_eq!(code_name(CodeChoice::Steane7), "steane7");
        assert_eq!(mode_name(RunMode::DiscreteBaseline), "discrete_baseline");
        assert_eq!(model_name(FitModel::NoneDetected), "none_detected");
    }
}
