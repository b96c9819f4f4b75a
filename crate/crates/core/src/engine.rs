//! The execution engine for one trial: owns the register, the clock, the
//! noise model, and the trial's random stream, and makes it structurally
//! impossible to apply a clean operation by accident.
//!
//! Every gate routed through [`Engine::apply_gate`] is jittered (continuous
//! regime) or exposed to the discrete failure channel (baseline regime);
//! every measurement leaves a residual; and every time step delivers one
//! idle rotation to every live qubit, including qubits currently inside a
//! gate or waiting on a measurement result. Time advances only here: a gate
//! costs `d_gate` steps, a measurement (or discard) `d_meas`, and idling any
//! number of steps the caller asks for. Drawing a fresh ancilla from the cold
//! supply is instantaneous; its imperfection shows up through the gates that
//! subsequently touch it.
//!
//! Idle kicks are sampled eagerly, one per live qubit per step, but their
//! application is deferred: consecutive kicks on a qubit are composed into a
//! single 2x2 unitary that is multiplied into the register no later than the
//! next operation touching that qubit. Single-qubit unitaries on distinct
//! qubits commute, so the deferral is exact — same trajectory, same state —
//! while skipping most of the full-register passes.
//!
//! The engine keeps an audit trail. Per-qubit ledgers record how many kicks
//! each qubit received versus how many steps it has been alive, and global
//! counters record gates vs jitter draws and measurements vs residual draws,
//! so a test can verify after the fact that no operation skipped its noise.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::noise::{apply_discrete_gate_failure, jitter_gate, sample_rotation, NoiseModel};
use crate::statevec::{StateVector, Unitary};
use crate::Result;

/// Which imperfection family is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseRegime {
    /// Small random rotations every step, jittered gates, measurement
    /// residuals. Nothing ever fails discretely; nothing is ever exact.
    Continuous,
    /// The conventional benchmark: exact gates that are followed, with
    /// probability `gamma1`/`gamma2`, by a uniformly random non-identity
    /// Pauli on the gate's qubits. Idle qubits and measurements are exact.
    DiscreteBaseline,
}

/// Counters kept by the engine for post-hoc verification.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub gates_applied: u64,
    /// Jittered-gate draws (continuous regime); equals `gates_applied` when
    /// no gate bypassed its perturbation.
    pub jitter_draws: u64,
    /// Discrete-failure lottery draws (baseline regime).
    pub discrete_checks: u64,
    pub discrete_failures: u64,
    pub measurements: u64,
    /// Residual-amplitude draws (continuous regime); equals `measurements`
    /// when no measurement was ideal.
    pub residual_draws: u64,
    /// A residual that is exactly zero would indicate a non-physical
    /// shortcut, so the nonzero ones are counted for comparison.
    pub nonzero_residuals: u64,
    /// Fresh qubits taken from the cold supply.
    pub fridge_draws: u64,
    /// Total idle rotations delivered (one per live qubit per step).
    pub idle_kicks: u64,
    /// Qubits retired or audited whose kick count did not equal the number
    /// of steps they were alive. Must stay zero.
    pub kick_mismatches: u64,
    pub retired_qubits: u64,
}

/// Result of [`Engine::finalize_audit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub clock: u64,
    pub live_qubits: usize,
    /// True iff every qubit, live or retired, received exactly one idle kick
    /// for every step it was alive.
    pub all_qubits_kicked_every_step: bool,
    pub stats: EngineStats,
}

#[derive(Debug, Clone, Copy)]
struct Ledger {
    /// Value of the engine's kick-step counter when the qubit appeared.
    born_kick_steps: u64,
    kicks: u64,
}

const IDENT2: [Complex64; 4] = [
    Complex64::ONE,
    Complex64::ZERO,
    Complex64::ZERO,
    Complex64::ONE,
];

/// Per-trial executor. `R` is the trial's dedicated random stream.
#[derive(Debug)]
pub struct Engine<R: Rng> {
    state: StateVector,
    noise: NoiseModel,
    regime: NoiseRegime,
    rng: R,
    clock: u64,
    /// Steps during which idle kicks were delivered (equals `clock` in the
    /// continuous regime; stays zero in the baseline regime, which has no
    /// idle noise).
    kick_steps: u64,
    ledgers: Vec<Ledger>,
    /// Composed-but-unapplied idle rotations, one 2x2 per qubit, row-major.
    pending: Vec<[Complex64; 4]>,
    pending_dirty: Vec<bool>,
    stats: EngineStats,
}

impl<R: Rng> Engine<R> {
    pub fn new(state: StateVector, noise: NoiseModel, regime: NoiseRegime, rng: R) -> Result<Self> {
        noise.validate()?;
        let n = state.n_qubits();
        Ok(Engine {
            state,
            noise,
            regime,
            rng,
            clock: 0,
            kick_steps: 0,
            ledgers: vec![
                Ledger {
                    born_kick_steps: 0,
                    kicks: 0,
                };
                n
            ],
            pending: vec![IDENT2; n],
            pending_dirty: vec![false; n],
            stats: EngineStats::default(),
        })
    }

    /// The register with all pending kicks applied. Needs `&mut self`
    /// because deferred rotations are flushed first.
    pub fn snapshot(&mut self) -> &StateVector {
        self.flush_all();
        &self.state
    }

    pub fn into_state(mut self) -> StateVector {
        self.flush_all();
        self.state
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn stats(&self) -> &EngineStats {
        &self.stats
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn regime(&self) -> NoiseRegime {
        self.regime
    }

    pub fn live_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    /// The trial's random stream, for protocol-level choices (e.g. which
    /// check to run during state verification). Sharing one stream keeps the
    /// whole trial reproducible from `(master_seed, trial_index)`.
    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }

    /// Applies a gate with the regime's imperfection and advances the clock
    /// by `d_gate` steps.
    pub fn apply_gate(&mut self, targets: &[usize], ideal: &Unitary) -> Result<()> {
        for &t in targets {
            if t < self.pending.len() {
                self.flush_qubit(t);
            }
        }
        match self.regime {
            NoiseRegime::Continuous => {
                let gate = jitter_gate(ideal, &self.noise, &mut self.rng)?;
                self.stats.jitter_draws += 1;
                self.state.apply_unitary(targets, &gate)?;
            }
            NoiseRegime::DiscreteBaseline => {
                self.state.apply_unitary(targets, ideal)?;
                self.stats.discrete_checks += 1;
                if apply_discrete_gate_failure(
                    &mut self.state,
                    targets,
                    &self.noise,
                    &mut self.rng,
                )?
                .is_some()
                {
                    self.stats.discrete_failures += 1;
                }
            }
        }
        self.stats.gates_applied += 1;
        self.advance(self.noise.d_gate)
    }

    /// Measures one qubit (leaving it in place, residual included) and
    /// advances the clock by `d_meas` steps.
    pub fn measure_qubit(&mut self, qubit: usize) -> Result<u8> {
        if qubit < self.pending.len() {
            self.flush_qubit(qubit);
        }
        let outcome = self
            .state
            .measure_qubit(qubit, self.effective_c_rms(), &mut self.rng)?;
        self.count_measurement(outcome.residual);
        self.advance(self.noise.d_meas)?;
        Ok(outcome.bit)
    }

    /// Measures one qubit and retires it from the register; costs `d_meas`
    /// steps like any other measurement.
    pub fn discard_qubit(&mut self, qubit: usize) -> Result<u8> {
        if qubit < self.pending.len() {
            self.flush_qubit(qubit);
        }
        let outcome = self
            .state
            .discard_qubit(qubit, self.effective_c_rms(), &mut self.rng)?;
        self.count_measurement(outcome.residual);
        self.retire_ledger(qubit);
        self.pending.remove(qubit);
        self.pending_dirty.remove(qubit);
        self.advance(self.noise.d_meas)?;
        Ok(outcome.bit)
    }

    /// Takes fresh qubits from the cold supply in the given basis state and
    /// returns their indices. Instantaneous: the cost of using an ancilla is
    /// paid by the gates and measurements that touch it.
    pub fn draw_ancillas(&mut self, bits: &str) -> Result<Vec<usize>> {
        let first = self.state.n_qubits();
        self.state.append_qubits(bits)?;
        let count = self.state.n_qubits() - first;
        for _ in 0..count {
            self.ledgers.push(Ledger {
                born_kick_steps: self.kick_steps,
                kicks: 0,
            });
            self.pending.push(IDENT2);
            self.pending_dirty.push(false);
        }
        self.stats.fridge_draws += count as u64;
        Ok((first..first + count).collect())
    }

    /// Lets the register sit for `steps` time steps.
    pub fn idle(&mut self, steps: u32) -> Result<()> {
        self.advance(steps)
    }

    /// Throws away the whole register and starts over with fresh qubits in
    /// the given basis state (used when encoding verification rejects).
    /// Instantaneous: the caller has already paid for the measurements that
    /// triggered the restart. Pending kicks on the dumped qubits are dropped
    /// with them — they were never observed.
    pub fn restart_register(&mut self, bits: &str) -> Result<()> {
        let max = self.state.max_qubits();
        let fresh = StateVector::with_max_qubits(bits.len(), bits, max)?;
        for led in std::mem::take(&mut self.ledgers) {
            self.check_ledger(&led);
            self.stats.retired_qubits += 1;
        }
        self.stats.fridge_draws += fresh.n_qubits() as u64;
        self.ledgers = vec![
            Ledger {
                born_kick_steps: self.kick_steps,
                kicks: 0,
            };
            fresh.n_qubits()
        ];
        self.pending = vec![IDENT2; fresh.n_qubits()];
        self.pending_dirty = vec![false; fresh.n_qubits()];
        self.state = fresh;
        Ok(())
    }

    /// Verifies the kick ledgers of all live qubits and returns the counters.
    /// Call once, at the end of a trial; mismatches found here are folded
    /// into the stats.
    pub fn finalize_audit(&mut self) -> AuditReport {
        self.flush_all();
        for led in self.ledgers.clone() {
            self.check_ledger(&led);
        }
        AuditReport {
            clock: self.clock,
            live_qubits: self.state.n_qubits(),
            all_qubits_kicked_every_step: self.stats.kick_mismatches == 0,
            stats: self.stats,
        }
    }

    fn effective_c_rms(&self) -> f64 {
        match self.regime {
            NoiseRegime::Continuous => self.noise.c_rms,
            NoiseRegime::DiscreteBaseline => 0.0,
        }
    }

    fn count_measurement(&mut self, residual: Complex64) {
        self.stats.measurements += 1;
        if self.regime == NoiseRegime::Continuous {
            self.stats.residual_draws += 1;
            if residual != Complex64::ZERO {
                self.stats.nonzero_residuals += 1;
            }
        }
    }

    fn retire_ledger(&mut self, qubit: usize) {
        let led = self.ledgers.remove(qubit);
        self.check_ledger(&led);
        self.stats.retired_qubits += 1;
    }

    fn check_ledger(&mut self, led: &Ledger) {
        if led.kicks != self.kick_steps - led.born_kick_steps {
            self.stats.kick_mismatches += 1;
        }
    }

    fn flush_qubit(&mut self, qubit: usize) {
        if !self.pending_dirty[qubit] {
            return;
        }
        let u = Unitary::from_entries_unchecked(1, self.pending[qubit].to_vec());
        self.state
            .apply_unitary(&[qubit], &u)
            .expect("deferred kick targets a live qubit");
        self.pending[qubit] = IDENT2;
        self.pending_dirty[qubit] = false;
    }

    fn flush_all(&mut self) {
        for q in 0..self.pending.len() {
            self.flush_qubit(q);
        }
    }

    fn advance(&mut self, steps: u32) -> Result<()> {
        match self.regime {
            NoiseRegime::DiscreteBaseline => {
                self.clock += u64::from(steps);
            }
            NoiseRegime::Continuous => {
                for _ in 0..steps {
                    self.clock += 1;
                    self.kick_steps += 1;
                    for q in 0..self.state.n_qubits() {
                        let event = sample_rotation(&self.noise, &mut self.rng);
                        if event.angle != 0.0 {
                            compose_rotation(&mut self.pending[q], event.axis, event.angle);
                            self.pending_dirty[q] = true;
                        }
                        self.ledgers[q].kicks += 1;
                        self.stats.idle_kicks += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Left-multiplies the rotation `exp(-i angle/2 (n . sigma))` into a pending
/// 2x2 product (the newest kick acts after everything already composed).
fn compose_rotation(pending: &mut [Complex64; 4], axis: [f64; 3], angle: f64) {
    let c = (angle * 0.5).cos();
    let s = (angle * 0.5).sin();
    let k00 = Complex64::new(c, -s * axis[2]);
    let k01 = Complex64::new(-s * axis[1], -s * axis[0]);
    let k10 = Complex64::new(s * axis[1], -s * axis[0]);
    let k11 = Complex64::new(c, s * axis[2]);
    let [p00, p01, p10, p11] = *pending;
    pending[0] = k00 * p00 + k01 * p10;
    pending[1] = k00 * p01 + k01 * p11;
    pending[2] = k10 * p00 + k11 * p10;
    pending[3] = k10 * p01 + k11 * p11;
}

// ======================================================================
// Tests
// ======================================================================
