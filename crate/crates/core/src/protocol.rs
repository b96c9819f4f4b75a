//! The memory experiment: keep one logical qubit alive for as long as
//! possible, with every operation drawn from the same imperfect hardware.
//!
//! A trial prepares an input state, optionally encodes it into a code block,
//! and then alternates idle periods with error-correction rounds while
//! recording the fidelity against the ideal time-zero target. Nothing in the
//! loop is noiseless: encoding gates, syndrome circuits, measurements and
//! recovery gates all run through the same [`Engine`] as the idle periods.
//! The only ideal object is the *reference state* used for scoring, which is
//! computed once and never fed back into the dynamics.
//!
//! Trials are independent: trial `i` runs on its own RNG stream derived from
//! `(master_seed, i)`, so results are reproducible bit-for-bit regardless of
//! how trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::codes::{encode, extract_syndrome, ideal_encode, majority_syndrome};
use crate::codes::{CodeSpec, ExtractionMode, SyndromePlan};
use crate::engine::{AuditReport, Engine, NoiseRegime};
use crate::noise::NoiseModel;
use crate::statevec::{StateVector, Unitary, HARD_MAX_QUBITS};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Which code (if any) protects the stored qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CodeChoice {
    /// No encoding: one bare physical qubit, no syndrome rounds.
    None,
    /// Three-qubit repetition code protecting against bit flips.
    #[default]
    Bitflip3,
    /// Seven-qubit CSS code correcting any single-qubit error.
    Steane7,
}

impl CodeChoice {
    /// The code specification, or `None` for the unencoded arm.
    pub fn spec(&self) -> Option<CodeSpec> {
        match self {
            CodeChoice::None => None,
            CodeChoice::Bitflip3 => Some(CodeSpec::bitflip3()),
            CodeChoice::Steane7 => Some(CodeSpec::steane7()),
        }
    }
}

/// Overall operating mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Continuous noise on everything: idle rotations, gate jitter,
    /// measurement residuals. The main regime.
    #[default]
    Continuous,
    /// Discrete Pauli failures after gates, ideal everything else. A
    /// sanity-check regime in which textbook error correction must win.
    DiscreteBaseline,
    /// No encoding and no correction rounds: the control arm the corrected
    /// runs are compared against. Uses continuous noise.
    Uncorrected,
}

/// Initial logical state stored in the memory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `(|0> + |1>)/sqrt(2)`: sensitive to phase noise.
    #[default]
    PlusX,
    /// `|0>`: sensitive to bit-flip noise.
    Basis0,
    /// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
    Custom { theta: f64, phi: f64 },
}

/// How Steane syndromes are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SteaneExtraction {
    /// Verified four-qubit cat states, one per stabilizer generator.
    #[default]
    Cat,
    /// A single bare ancilla per generator (cheaper, spreads correlated
    /// errors into the data).
    Bare,
}

/// Full description of one memory experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Code protecting the memory (`none` only with `mode = "uncorrected"`).
    pub code: CodeChoice,
    /// Operating mode.
    pub mode: RunMode,
    /// Stored logical state.
    pub initial_state: InitialState,
    /// Physical noise parameters.
    pub noise: NoiseModel,
    /// Idle steps between correction rounds (storage time per round).
    pub idle_steps_per_round: u32,
    /// Syndrome repetitions per round, majority-voted (`m`).
    pub syndrome_repeats: u32,
    /// Verification repetitions for encoding and cat checks (`v`).
    pub verification_repeats: u32,
    /// Re-encode / cat-rebuild budget before giving up on verification.
    pub retry_budget: u32,
    /// Number of correction rounds per trial.
    pub max_rounds: u32,
    /// Trial stops early once fidelity drops below this threshold.
    pub crash_fidelity: f64,
    /// Number of Monte Carlo trials.
    pub trials: u64,
    /// Master seed; trial `i` uses RNG stream `i` of this seed.
    pub master_seed: u64,
    /// Steane syndrome readout style (ignored for other codes).
    pub steane_extraction: SteaneExtraction,
    /// Register capacity the run may use (peak live qubits).
    pub max_qubits: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            code: CodeChoice::Bitflip3,
            mode: RunMode::Continuous,
            initial_state: InitialState::PlusX,
            noise: NoiseModel::default(),
            idle_steps_per_round: 10,
            syndrome_repeats: 3,
            verification_repeats: 3,
            retry_budget: 10,
            max_rounds: 50,
            crash_fidelity: 0.5,
            trials: 100,
            master_seed: 1,
            steane_extraction: SteaneExtraction::Cat,
            max_qubits: 22,
        }
    }
}

impl RunConfig {
    /// Peak number of simultaneously live qubits this configuration needs.
    pub fn required_qubits(&self) -> usize {
        match self.code {
            CodeChoice::None => 1,
            // 3 data + 3 block ancillas.
            CodeChoice::Bitflip3 => 6,
            CodeChoice::Steane7 => match self.steane_extraction {
                // 7 data + 1 bare ancilla.
                SteaneExtraction::Bare => 8,
                // 7 data + 4 cat qubits + 1 verification probe.
                SteaneExtraction::Cat => 12,
            },
        }
    }

    /// Checks parameter ranges and cross-field consistency. Error messages
    /// name the offending configuration key.
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.syndrome_repeats == 0 {
            return Err(Error::config("syndrome_repeats must be at least 1"));
        }
        if self.verification_repeats == 0 {
            return Err(Error::config("verification_repeats must be at least 1"));
        }
        if !(self.crash_fidelity > 0.0 && self.crash_fidelity < 1.0) {
            return Err(Error::config(
                "crash_fidelity must lie strictly between 0 and 1",
            ));
        }
        match (self.mode, self.code) {
            (RunMode::Uncorrected, CodeChoice::None) => {}
            (RunMode::Uncorrected, _) => {
                return Err(Error::config(
                    "mode \"uncorrected\" requires code \"none\" (the control arm is a bare qubit)",
                ));
            }
            (_, CodeChoice::None) => {
                return Err(Error::config(
                    "code \"none\" requires mode \"uncorrected\" (corrected runs need a code)",
                ));
            }
            _ => {}
        }
        if self.max_qubits > HARD_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: self.max_qubits,
                max: HARD_MAX_QUBITS,
            });
        }
        let required = self.required_qubits();
        if required > self.max_qubits {
            return Err(Error::Capacity {
                requested: required,
                max: self.max_qubits,
            });
        }
        Ok(())
    }

    fn regime(&self) -> NoiseRegime {
        match self.mode {
            RunMode::DiscreteBaseline => NoiseRegime::DiscreteBaseline,
            RunMode::Continuous | RunMode::Uncorrected => NoiseRegime::Continuous,
        }
    }

    fn extraction_mode(&self, code: &CodeSpec) -> ExtractionMode {
        match code.plan {
            SyndromePlan::Block { .. } => ExtractionMode::Bare,
            SyndromePlan::PerGenerator => match self.steane_extraction {
                SteaneExtraction::Bare => ExtractionMode::Bare,
                SteaneExtraction::Cat => ExtractionMode::VerifiedCat {
                    repeats: self.verification_repeats,
                    rebuild_budget: self.retry_budget,
                },
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Events and results
// ---------------------------------------------------------------------------

/// Anything noteworthy that happened during a trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Encoding verification failed; the register was rebuilt from scratch.
    EncodingRetry { attempt: u32 },
    /// The re-encode budget ran out; the trial proceeds with the last,
    /// unverified encoding.
    EncodingVerificationExhausted,
    /// A cat state could not be verified within its rebuild budget and was
    /// used anyway.
    CatVerificationExhausted,
    /// Majority vote over syndrome repetitions was ambiguous; the round
    /// applied no correction.
    SyndromeTie,
    /// The voted syndrome matched no single-qubit recovery; the round
    /// applied no correction.
    UnrecognizedSyndrome { bits: String },
    /// Fidelity fell below the crash threshold and the trial stopped.
    Crashed { fidelity: f64 },
}

impl EventKind {
    /// Short machine-friendly tag for CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::EncodingRetry { .. } => "encoding_retry",
            EventKind::EncodingVerificationExhausted => "encoding_verification_exhausted",
            EventKind::CatVerificationExhausted => "cat_verification_exhausted",
            EventKind::SyndromeTie => "syndrome_tie",
            EventKind::UnrecognizedSyndrome { .. } => "unrecognized_syndrome",
            EventKind::Crashed { .. } => "crashed",
        }
    }

    /// Free-form detail column for CSV output.
    pub fn detail(&self) -> String {
        match self {
            EventKind::EncodingRetry { attempt } => format!("attempt={attempt}"),
            EventKind::UnrecognizedSyndrome { bits } => format!("bits={bits}"),
            EventKind::Crashed { fidelity } => format!("fidelity={fidelity:.6}"),
            _ => String::new(),
        }
    }
}

/// One event, stamped with the trial and round it occurred in (round 0 is
/// preparation/encoding; correction rounds are numbered from 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialEvent {
    pub trial: u64,
    pub round: u32,
    pub kind: EventKind,
}

/// Everything recorded about a single trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    /// Fidelity against the ideal reference; index 0 is right after
    /// encoding, index `r` is right after correction round `r`.
    pub fidelities: Vec<f64>,
    /// Engine clock (hardware steps since trial start) at each record.
    pub elapsed_steps: Vec<u64>,
    /// Majority-voted syndrome accepted in each correction round.
    pub syndromes: Vec<String>,
    /// Round at which the trial crashed, if it did.
    pub crashed_at: Option<u32>,
    pub events: Vec<TrialEvent>,
    /// Bookkeeping proof that noise was applied everywhere it should be.
    pub audit: AuditReport,
}

/// Aggregated outcome of a whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub config: RunConfig,
    /// Per-round mean fidelity over trials still alive at that round
    /// (length `max_rounds + 1`, index 0 = right after encoding).
    pub mean_fidelity: Vec<f64>,
    /// Per-round sample standard deviation (same indexing).
    pub std_fidelity: Vec<f64>,
    /// Number of trials contributing at each round.
    pub alive: Vec<u64>,
    /// Crashes per round (same indexing; index 0 = crashed at encoding).
    pub crash_round_counts: Vec<u64>,
    pub total_crashes: u64,
    /// Mean hardware steps consumed per correction round, if any trial
    /// completed at least one round.
    pub mean_steps_per_round: Option<f64>,
    /// Total fresh ancillas drawn across all trials.
    pub total_ancillas: u64,
    pub trials: Vec<TrialResult>,
}

// ---------------------------------------------------------------------------
// State preparation
// ---------------------------------------------------------------------------

fn preparation_gates(init: &InitialState) -> Vec<Unitary> {
    match init {
        InitialState::Basis0 => vec![],
        InitialState::PlusX => vec![Unitary::ry(FRAC_PI_2)],
        InitialState::Custom { theta, phi } => vec![Unitary::ry(*theta), Unitary::rz(*phi)],
    }
}

fn prepare_input<R: rand::Rng>(eng: &mut Engine<R>, init: &InitialState) -> Result<()> {
    for gate in preparation_gates(init) {
        eng.apply_gate(&[0], &gate)?;
    }
    Ok(())
}

/// The ideal one-qubit input state (no noise), used to build the scoring
/// reference.
pub fn ideal_input(init: &InitialState) -> Result<StateVector> {
    let mut state = StateVector::new_basis_state(1, "0")?;
    for gate in preparation_gates(init) {
        state.apply_unitary(&[0], &gate)?;
    }
    Ok(state)
}

/// The ideal target state a trial is scored against: the exact encoding of
/// the exact input. Computed once at time zero and never evolved.
pub fn reference_state(config: &RunConfig) -> Result<StateVector> {
    let input = ideal_input(&config.initial_state)?;
    match config.code.spec() {
        Some(code) => ideal_encode(&code, &input),
        None => Ok(input),
    }
}

// ---------------------------------------------------------------------------
// Trial execution
// ---------------------------------------------------------------------------

fn encode_with_verification<R: rand::Rng>(
    eng: &mut Engine<R>,
    code: &CodeSpec,
    config: &RunConfig,
    trial: u64,
    events: &mut Vec<TrialEvent>,
) -> Result<()> {
    let mode = config.extraction_mode(code);
    let trivial = code.trivial_syndrome();
    for attempt in 0..=config.retry_budget {
        if attempt > 0 {
            // Scrap the register and start over with a fresh qubit.
            eng.restart_register("0")?;
            prepare_input(eng, &config.initial_state)?;
        }
        encode(eng, code)?;
        let mut clean = true;
        for _ in 0..config.verification_repeats {
            let record = extract_syndrome(eng, code, mode)?;
            if record.verification_exhausted {
                events.push(TrialEvent {
                    trial,
                    round: 0,
                    kind: EventKind::CatVerificationExhausted,
                });
            }
            if record.bits != trivial {
                clean = false;
                break;
            }
        }
        if clean {
            return Ok(());
        }
        events.push(TrialEvent {
            trial,
            round: 0,
            kind: EventKind::EncodingRetry { attempt },
        });
    }
    events.push(TrialEvent {
        trial,
        round: 0,
        kind: EventKind::EncodingVerificationExhausted,
    });
    Ok(())
}

/// Runs one complete trial on its own deterministic RNG stream.
pub fn run_trial(config: &RunConfig, trial: u64) -> Result<TrialResult> {
    let mut rng = ChaCha12Rng::seed_from_u64(config.master_seed);
    rng.set_stream(trial);

    let reference = reference_state(config)?;
    let code = config.code.spec();

    let state = StateVector::with_max_qubits(1, "0", config.max_qubits)?;
    let mut eng = Engine::new(state, config.noise, config.regime(), rng)?;
    let mut events = Vec::new();

    prepare_input(&mut eng, &config.initial_state)?;
    if let Some(code) = &code {
        encode_with_verification(&mut eng, code, config, trial, &mut events)?;
    }

    let mut fidelities = Vec::with_capacity(config.max_rounds as usize + 1);
    let mut elapsed_steps = Vec::with_capacity(config.max_rounds as usize + 1);
    let mut syndromes = Vec::with_capacity(config.max_rounds as usize);
    let mut crashed_at = None;

    let f0 = eng.snapshot().fidelity(&reference)?;
    fidelities.push(f0);
    elapsed_steps.push(eng.clock());
    if f0 < config.crash_fidelity {
        crashed_at = Some(0);
        events.push(TrialEvent {
            trial,
            round: 0,
            kind: EventKind::Crashed { fidelity: f0 },
        });
    }

    if crashed_at.is_none() {
        'rounds: for round in 1..=config.max_rounds {
            eng.idle(config.idle_steps_per_round)?;

            if let Some(code) = &code {
                let mode = config.extraction_mode(code);
                let mut readings = Vec::with_capacity(config.syndrome_repeats as usize);
                for _ in 0..config.syndrome_repeats {
                    let record = extract_syndrome(&mut eng, code, mode)?;
                    if record.verification_exhausted {
                        events.push(TrialEvent {
                            trial,
                            round,
                            kind: EventKind::CatVerificationExhausted,
                        });
                    }
                    readings.push(record.bits);
                }
                let (winner, tie) = majority_syndrome(&readings);
                let accepted = if tie {
                    events.push(TrialEvent {
                        trial,
                        round,
                        kind: EventKind::SyndromeTie,
                    });
                    code.trivial_syndrome()
                } else {
                    winner
                };
                match code.recovery_ops(&accepted)? {
                    Some(ops) => {
                        for op in &ops {
                            op.apply(&mut eng)?;
                        }
                    }
                    None => {
                        events.push(TrialEvent {
                            trial,
                            round,
                            kind: EventKind::UnrecognizedSyndrome {
                                bits: accepted.clone(),
                            },
                        });
                    }
                }
                syndromes.push(accepted);
            }

            let f = eng.snapshot().fidelity(&reference)?;
            fidelities.push(f);
            elapsed_steps.push(eng.clock());
            if f < config.crash_fidelity {
                crashed_at = Some(round);
                events.push(TrialEvent {
                    trial,
                    round,
                    kind: EventKind::Crashed { fidelity: f },
                });
                break 'rounds;
            }
        }
    }

    let audit = eng.finalize_audit();
    Ok(TrialResult {
        trial,
        fidelities,
        elapsed_steps,
        syndromes,
        crashed_at,
        events,
        audit,
    })
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

fn aggregate(config: RunConfig, trials: Vec<TrialResult>) -> RunResult {
    let rounds = config.max_rounds as usize + 1;
    let mut mean_fidelity = vec![0.0; rounds];
    let mut std_fidelity = vec![0.0; rounds];
    let mut alive = vec![0u64; rounds];
    let mut crash_round_counts = vec![0u64; rounds];

    for r in 0..rounds {
        let values: Vec<f64> = trials
            .iter()
            .filter_map(|t| t.fidelities.get(r).copied())
            .collect();
        alive[r] = values.len() as u64;
        if values.is_empty() {
            continue;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        mean_fidelity[r] = mean;
        if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            std_fidelity[r] = var.sqrt();
        }
    }

    let mut total_crashes = 0u64;
    for t in &trials {
        if let Some(r) = t.crashed_at {
            crash_round_counts[r as usize] += 1;
            total_crashes += 1;
        }
    }

    let per_trial_rates: Vec<f64> = trials
        .iter()
        .filter(|t| t.fidelities.len() >= 2)
        .map(|t| {
            let span = (t.elapsed_steps[t.elapsed_steps.len() - 1] - t.elapsed_steps[0]) as f64;
            span / (t.fidelities.len() - 1) as f64
        })
        .collect();
    let mean_steps_per_round = if per_trial_rates.is_empty() {
        None
    } else {
        Some(per_trial_rates.iter().sum::<f64>() / per_trial_rates.len() as f64)
    };

    let total_ancillas = trials.iter().map(|t| t.audit.stats.fridge_draws).sum();

    RunResult {
        config,
        mean_fidelity,
        std_fidelity,
        alive,
        crash_round_counts,
        total_crashes,
        mean_steps_per_round,
        total_ancillas,
        trials,
    }
}

/// Runs all trials of a configuration (in parallel when multiple threads are
/// available) and aggregates the results. Trial ordering and RNG streams are
/// fixed by the configuration, so output is identical regardless of thread
/// count.
pub fn run_experiment(config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let trials: Vec<TrialResult> = (0..config.trials)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(config.clone(), trials))
}

// ---------------------------------------------------------------------------
