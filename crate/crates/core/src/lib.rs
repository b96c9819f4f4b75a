//! Trajectory-level simulation of a single error-correction-protected qubit
//! memory in which *nothing* is ideal: every gate is perturbed, every
//! measurement is imperfect, and every qubit that is out of the ancilla
//! refrigerator is continuously kicked by small random rotations.
//!
//! The crate is organized bottom-up:
//!
//! * [`statevec`] — dense complex state vectors and small unitaries, the only
//!   linear-algebra layer in the crate.
//! * [`noise`] — the imperfection processes: per-step random rotations, gate
//!   jitter, imperfect-measurement residuals, and a discrete Pauli failure
//!   model kept behind a run-mode switch for baseline comparisons.
//! * [`engine`] — a timed executor that owns one trial's register, applies
//!   gates/measurements through the noise model, advances the step clock, and
//!   keeps audit counters proving that no ideal shortcut was taken.
//! * [`codes`] — the three-qubit bit-flip code and the seven-qubit CSS code:
//!   encoding circuits, syndrome extraction (plain and cat-state flavors),
//!   recovery tables, and cat preparation/verification.
//! * [`protocol`] — the memory experiment itself: encode, verify, then rounds
//!   of idle → repeated syndrome extraction → majority vote → recovery, with
//!   fidelity recorded against the ideal encoded state.
//! * [`analysis`] — dephasing-scaling and failure-exponent experiments, the
//!   probability-vs-amplitude exercise, and exponential decay fitting.
//!
//! Ensembles are always built from pure-state trajectories: there are no
//! density matrices anywhere. Every trial derives its own random stream from
//! `(master_seed, trial_index)`, so results are bit-identical across reruns
//! and independent of how trials are scheduled across threads.

pub mod analysis;
pub mod codes;
pub mod engine;
mod error;
pub mod noise;
pub mod protocol;
pub mod statevec;

pub use analysis::{
    compare_corrected_uncorrected, compare_point, dephasing_scaling_experiment, fit_exponential,
    probability_vs_amplitude_exercise, AmplitudeExercise, ComparisonPoint, ComparisonRow, DecayFit,
    ExerciseAxis, FitModel, ScalingPoint, ScalingResult,
};
pub use codes::{
    CodeSpec, ExtractionMode, GateKind, GateOp, Generator, PauliBasis, SyndromePlan, SyndromeRecord,
};
pub use engine::{AuditReport, Engine, EngineStats, NoiseRegime};
pub use error::{Error, Result};
pub use noise::{AxisMode, NoiseModel, RotationEvent};
pub use protocol::{
    run_experiment, run_trial, CodeChoice, EventKind, InitialState, RunConfig, RunMode, RunResult,
    SteaneExtraction, TrialEvent, TrialResult,
};
pub use statevec::{MeasurementOutcome, StateVector, Unitary, DEFAULT_MAX_QUBITS, HARD_MAX_QUBITS};
