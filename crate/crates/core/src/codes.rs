//! The two stabilizer codes under test and the circuits that operate them:
//! encoding, syndrome extraction, and recovery.
//!
//! Data qubits occupy register indices `0..n_data`, with the logical input
//! arriving on qubit 0 before encoding. Ancillas are always drawn above the
//! data block and retired (measured and removed) before an extraction
//! returns, so between operations the register holds exactly the data block.
//!
//! ## Three-qubit repetition code
//!
//! `|b> -> |bbb>` via two fan-out CNOTs. Extraction draws a block of three
//! ancillas and wires data parities onto the outer two: ancilla 0 collects
//! qubits 0 and 1, ancilla 2 collects qubits 1 and 2, and the middle ancilla
//! is never touched — it serves as a canary whose bit must read 0. Syndromes
//! with the canary set have no assigned recovery and are reported as
//! unrecognized.
//!
//! ## Seven-qubit code
//!
//! The smallest distance-3 code that corrects any single-qubit error. Six
//! weight-4 generators (three Z-type, three X-type on the same supports)
//! produce a six-bit syndrome; each three-bit half is a binary pointer to
//! the damaged qubit. Extraction is Shor-style: each generator is read
//! through a four-qubit cat state that is verified by parity probes before
//! being coupled to the data, so that a single fault inside the extraction
//! machinery cannot write a multi-qubit error into the data block. A bare
//! single-ancilla mode is also provided; it is cheaper but a faulty ancilla
//! can spread correlated damage.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::statevec::{StateVector, Unitary};
use crate::{Error, Result};

/// Pauli type of a stabilizer generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PauliBasis {
    X,
    Z,
}

/// One stabilizer generator: a Pauli type and the data qubits it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub basis: PauliBasis,
    pub support: Vec<usize>,
}

/// A gate in a code circuit. Two-qubit kinds read `targets[0]` as the
/// control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    Ry(f64),
    Rz(f64),
    Cnot,
    Cz,
}

impl GateKind {
    pub fn unitary(&self) -> Unitary {
        match self {
            GateKind::H => Unitary::hadamard(),
            GateKind::X => Unitary::pauli_x(),
            GateKind::Y => Unitary::pauli_y(),
            GateKind::Z => Unitary::pauli_z(),
            GateKind::Ry(theta) => Unitary::ry(*theta),
            GateKind::Rz(phi) => Unitary::rz(*phi),
            GateKind::Cnot => Unitary::cnot(),
            GateKind::Cz => Unitary::cz(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz => 2,
            _ => 1,
        }
    }
}

/// A gate bound to register positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
}

impl GateOp {
    pub fn single(kind: GateKind, q: usize) -> Self {
        GateOp {
            kind,
            targets: vec![q],
        }
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, q)
    }

    pub fn z(q: usize) -> Self {
        Self::single(GateKind::Z, q)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp {
            kind: GateKind::Cnot,
            targets: vec![control, target],
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        GateOp {
            kind: GateKind::Cz,
            targets: vec![a, b],
        }
    }

    /// Applies the op exactly (no noise, no time), for building references.
    pub fn apply_exact(&self, state: &mut StateVector) -> Result<()> {
        state.apply_unitary(&self.targets, &self.kind.unitary())
    }

    /// Applies the op through an engine (noisy, timed).
    pub fn apply<R: Rng>(&self, eng: &mut Engine<R>) -> Result<()> {
        eng.apply_gate(&self.targets, &self.kind.unitary())
    }
}

/// How syndrome bits are gathered.
#[derive(Debug, Clone, PartialEq)]
pub enum SyndromePlan {
    /// Draw a fixed block of ancillas, run a fixed wiring circuit, measure
    /// them all. `gen_to_ancilla[i]` says which measured bit carries
    /// generator `i`; unmapped bits are canaries that must read 0.
    Block {
        n_ancillas: usize,
        wiring: Vec<GateOp>,
        gen_to_ancilla: Vec<usize>,
    },
    /// Read each generator separately through its own ancilla machinery
    /// (bare single ancilla or verified cat, chosen at extraction time).
    PerGenerator,
}

/// How a `PerGenerator` extraction talks to the data block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractionMode {
    /// One bare ancilla per generator. Cheap, but a single ancilla fault
    /// can propagate through the coupling gates into the data block.
    Bare,
    /// One verified cat state per generator: `repeats` random parity probes
    /// must all read 0, rebuilding the cat up to `rebuild_budget` times
    /// before giving up and using an unverified one.
    VerifiedCat { repeats: u32, rebuild_budget: u32 },
}

/// Outcome of one full syndrome extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeRecord {
    /// Syndrome bits as a string, in the code's canonical order.
    pub bits: String,
    /// How many cat states had to be rebuilt after failing verification.
    pub cat_rebuilds: u32,
    /// True if some cat exhausted its rebuild budget and was used unverified.
    pub verification_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CodeKind {
    BitFlip3,
    Steane7,
}

/// A code: its encoding circuit, its generators, and its recovery table.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    kind: CodeKind,
    pub name: &'static str,
    pub n_data: usize,
    pub encoding: Vec<GateOp>,
    pub generators: Vec<Generator>,
    pub plan: SyndromePlan,
}

impl CodeSpec {
    /// Three-qubit repetition code protecting against bit flips.
    pub fn bitflip3() -> Self {
        CodeSpec {
            kind: CodeKind::BitFlip3,
            name: "bitflip3",
            n_data: 3,
            encoding: vec![GateOp::cnot(0, 1), GateOp::cnot(0, 2)],
            generators: vec![
                Generator {
                    basis: PauliBasis::Z,
                    support: vec![0, 1],
                },
                Generator {
                    basis: PauliBasis::Z,
                    support: vec![1, 2],
                },
            ],
            plan: SyndromePlan::Block {
                n_ancillas: 3,
                // Ancillas sit at register indices 3, 4, 5. The middle one
                // is left untouched on purpose (canary).
                wiring: vec![
                    GateOp::cnot(0, 3),
                    GateOp::cnot(1, 3),
                    GateOp::cnot(1, 5),
                    GateOp::cnot(2, 5),
                ],
                gen_to_ancilla: vec![0, 2],
            },
        }
    }

    /// Seven-qubit distance-3 code correcting any single-qubit error.
    pub fn steane7() -> Self {
        let supports: [Vec<usize>; 3] = [vec![0, 2, 4, 6], vec![1, 2, 5, 6], vec![3, 4, 5, 6]];
        let mut generators = Vec::new();
        for basis in [PauliBasis::Z, PauliBasis::X] {
            for s in &supports {
                generators.push(Generator {
                    basis,
                    support: s.clone(),
                });
            }
        }
        CodeSpec {
            kind: CodeKind::Steane7,
            name: "steane7",
            n_data: 7,
            // Input on qubit 0; seeds 1, 3, 4 spread the stabilizer span.
            encoding: vec![
                GateOp::cnot(0, 5),
                GateOp::cnot(0, 6),
                GateOp::h(1),
                GateOp::h(3),
                GateOp::h(4),
                GateOp::cnot(1, 2),
                GateOp::cnot(1, 5),
                GateOp::cnot(1, 6),
                GateOp::cnot(3, 0),
                GateOp::cnot(3, 2),
                GateOp::cnot(3, 5),
                GateOp::cnot(4, 0),
                GateOp::cnot(4, 2),
                GateOp::cnot(4, 6),
            ],
            generators,
            plan: SyndromePlan::PerGenerator,
        }
    }

    pub fn syndrome_len(&self) -> usize {
        match &self.plan {
            SyndromePlan::Block { n_ancillas, .. } => *n_ancillas,
            SyndromePlan::PerGenerator => self.generators.len(),
        }
    }

    pub fn trivial_syndrome(&self) -> String {
        "0".repeat(self.syndrome_len())
    }

    /// Expands per-generator parity bits into the canonical syndrome string
    /// (canary positions read 0).
    pub fn syndrome_from_generator_bits(&self, bits: &[u8]) -> Result<String> {
        if bits.len() != self.generators.len() {
            return Err(Error::config(format!(
                "expected {} generator bits, got {}",
                self.generators.len(),
                bits.len()
            )));
        }
        let mut s = vec![b'0'; self.syndrome_len()];
        match &self.plan {
            SyndromePlan::Block { gen_to_ancilla, .. } => {
                for (g, &bit) in bits.iter().enumerate() {
                    s[gen_to_ancilla[g]] = b'0' + bit;
                }
            }
            SyndromePlan::PerGenerator => {
                for (g, &bit) in bits.iter().enumerate() {
                    s[g] = b'0' + bit;
                }
            }
        }
        Ok(String::from_utf8(s).expect("ascii"))
    }

    /// The correction for a syndrome, or `None` when the syndrome has no
    /// assigned recovery (possible only for the repetition code's canary
    /// patterns). An empty vector means "nothing to fix".
    pub fn recovery_ops(&self, syndrome: &str) -> Result<Option<Vec<GateOp>>> {
        if syndrome.len() != self.syndrome_len()
            || !syndrome.bytes().all(|b| b == b'0' || b == b'1')
        {
            return Err(Error::BadBitstring {
                bits: syndrome.to_string(),
                reason: format!("syndrome must be {} bits of 0/1", self.syndrome_len()),
            });
        }
        let bit = |i: usize| -> usize { (syndrome.as_bytes()[i] - b'0') as usize };
        match self.kind {
            CodeKind::BitFlip3 => Ok(match syndrome {
                "000" => Some(vec![]),
                "100" => Some(vec![GateOp::x(0)]),
                "101" => Some(vec![GateOp::x(1)]),
                "001" => Some(vec![GateOp::x(2)]),
                _ => None,
            }),
            CodeKind::Steane7 => {
                let mut ops = Vec::new();
                let z_pointer = bit(0) + 2 * bit(1) + 4 * bit(2);
                if z_pointer > 0 {
                    ops.push(GateOp::x(z_pointer - 1));
                }
                let x_pointer = bit(3) + 2 * bit(4) + 4 * bit(5);
                if x_pointer > 0 {
                    ops.push(GateOp::z(x_pointer - 1));
                }
                Ok(Some(ops))
            }
        }
    }

    /// Coupling circuit reading one generator onto a single bare ancilla at
    /// register index `ancilla` (measure the ancilla afterwards; its bit is
    /// the generator's parity).
    pub fn bare_generator_circuit(gen: &Generator, ancilla: usize) -> Vec<GateOp> {
        let mut ops = Vec::new();
        match gen.basis {
            PauliBasis::Z => {
                for &d in &gen.support {
                    ops.push(GateOp::cnot(d, ancilla));
                }
            }
            PauliBasis::X => {
                ops.push(GateOp::h(ancilla));
                for &d in &gen.support {
                    ops.push(GateOp::cnot(ancilla, d));
                }
                ops.push(GateOp::h(ancilla));
            }
        }
        ops
    }
}

/// Encodes the single live qubit (the prepared input) into the code block:
/// draws `n_data - 1` fresh qubits and runs the encoding circuit through the
/// engine.
pub fn encode<R: Rng>(eng: &mut Engine<R>, code: &CodeSpec) -> Result<()> {
    if eng.live_qubits() != 1 {
        return Err(Error::config(format!(
            "encoding expects exactly the input qubit in the register, found {}",
            eng.live_qubits()
        )));
    }
    eng.draw_ancillas(&"0".repeat(code.n_data - 1))?;
    for op in &code.encoding {
        op.apply(eng)?;
    }
    Ok(())
}

/// The exact codeword for a 1-qubit input state: encode with perfect gates,
/// outside any engine. Used as the fidelity reference.
pub fn ideal_encode(code: &CodeSpec, input: &StateVector) -> Result<StateVector> {
    if input.n_qubits() != 1 {
        return Err(Error::config(format!(
            "ideal_encode takes a 1-qubit input, got {} qubits",
            input.n_qubits()
        )));
    }
    let mut state = input.clone();
    state.append_qubits(&"0".repeat(code.n_data - 1))?;
    for op in &code.encoding {
        op.apply_exact(&mut state)?;
    }
    Ok(state)
}

/// Runs one full syndrome extraction through the engine. The register must
/// hold exactly the data block on entry and holds it again on return.
pub fn extract_syndrome<R: Rng>(
    eng: &mut Engine<R>,
    code: &CodeSpec,
    mode: ExtractionMode,
) -> Result<SyndromeRecord> {
    if eng.live_qubits() != code.n_data {
        return Err(Error::config(format!(
            "extraction expects the {}-qubit data block alone in the register, found {} qubits",
            code.n_data,
            eng.live_qubits()
        )));
    }
    match &code.plan {
        SyndromePlan::Block {
            n_ancillas, wiring, ..
        } => {
            eng.draw_ancillas(&"0".repeat(*n_ancillas))?;
            for op in wiring {
                op.apply(eng)?;
            }
            // Retire ancillas top-down so lower indices stay stable.
            let mut bits = vec![0u8; *n_ancillas];
            for i in (0..*n_ancillas).rev() {
                bits[i] = eng.discard_qubit(code.n_data + i)?;
            }
            let s: String = bits.iter().map(|b| char::from(b'0' + b)).collect();
            Ok(SyndromeRecord {
                bits: s,
                cat_rebuilds: 0,
                verification_exhausted: false,
            })
        }
        SyndromePlan::PerGenerator => {
            let mut bits = Vec::with_capacity(code.generators.len());
            let mut rebuilds = 0;
            let mut exhausted = false;
            for gen in &code.generators {
                match mode {
                    ExtractionMode::Bare => {
                        let anc = eng.draw_ancillas("0")?[0];
                        for op in CodeSpec::bare_generator_circuit(gen, anc) {
                            op.apply(eng)?;
                        }
                        bits.push(eng.discard_qubit(anc)?);
                    }
                    ExtractionMode::VerifiedCat {
                        repeats,
                        rebuild_budget,
                    } => {
                        let built =
                            build_verified_cat(eng, gen.support.len(), repeats, rebuild_budget)?;
                        rebuilds += built.rebuilds;
                        exhausted |= built.exhausted;
                        bits.push(read_generator_through_cat(eng, gen, &built.qubits)?);
                    }
                }
            }
            Ok(SyndromeRecord {
                bits: code.syndrome_from_generator_bits(&bits)?,
                cat_rebuilds: rebuilds,
                verification_exhausted: exhausted,
            })
        }
    }
}

/// A cat state that passed (or exhausted) verification.
pub struct VerifiedCat {
    pub qubits: Vec<usize>,
    pub rebuilds: u32,
    pub exhausted: bool,
}

/// Draws `size` fresh qubits and entangles them into `|0..0> + |1..1>` with
/// a Hadamard and a CNOT chain.
pub fn prepare_cat<R: Rng>(eng: &mut Engine<R>, size: usize) -> Result<Vec<usize>> {
    let qubits = eng.draw_ancillas(&"0".repeat(size))?;
    eng.apply_gate(&[qubits[0]], &Unitary::hadamard())?;
    for w in qubits.windows(2) {
        eng.apply_gate(&[w[0], w[1]], &Unitary::cnot())?;
    }
    Ok(qubits)
}

/// One verification probe: picks a random adjacent pair of cat qubits,
/// copies their parity onto a fresh ancilla, measures it. A clean cat always
/// reads 0.
pub fn cat_probe_passes<R: Rng>(eng: &mut Engine<R>, cat: &[usize]) -> Result<bool> {
    let pair = eng.rng_mut().random_range(0..cat.len() - 1);
    let probe = eng.draw_ancillas("0")?[0];
    eng.apply_gate(&[cat[pair], probe], &Unitary::cnot())?;
    eng.apply_gate(&[cat[pair + 1], probe], &Unitary::cnot())?;
    Ok(eng.discard_qubit(probe)? == 0)
}

/// Builds a cat state and verifies it with `repeats` random parity probes,
/// tearing it down and rebuilding on any probe failure. After
/// `rebuild_budget` failed builds the next build is used unverified and the
/// record is flagged.
pub fn build_verified_cat<R: Rng>(
    eng: &mut Engine<R>,
    size: usize,
    repeats: u32,
    rebuild_budget: u32,
) -> Result<VerifiedCat> {
    let mut rebuilds = 0;
    loop {
        let qubits = prepare_cat(eng, size)?;
        if rebuilds >= rebuild_budget {
            return Ok(VerifiedCat {
                qubits,
                rebuilds,
                exhausted: true,
            });
        }
        let mut clean = true;
        for _ in 0..repeats {
            if !cat_probe_passes(eng, &qubits)? {
                clean = false;
                break;
            }
        }
        if clean {
            return Ok(VerifiedCat {
                qubits,
                rebuilds,
                exhausted: false,
            });
        }
        // Tear the suspect cat down (top-down keeps indices stable).
        for &q in qubits.iter().rev() {
            eng.discard_qubit(q)?;
        }
        rebuilds += 1;
    }
}

/// Couples a prepared cat to one generator's support, rotates the cat into
/// the measurement basis, and retires it; the parity of the measured bits is
/// the generator's syndrome bit.
fn read_generator_through_cat<R: Rng>(
    eng: &mut Engine<R>,
    gen: &Generator,
    cat: &[usize],
) -> Result<u8> {
    for (&c, &d) in cat.iter().zip(&gen.support) {
        match gen.basis {
            PauliBasis::Z => eng.apply_gate(&[c, d], &Unitary::cz())?,
            PauliBasis::X => eng.apply_gate(&[c, d], &Unitary::cnot())?,
        }
    }
    for &c in cat {
        eng.apply_gate(&[c], &Unitary::hadamard())?;
    }
    let mut parity = 0u8;
    for &c in cat.iter().rev() {
        parity ^= eng.discard_qubit(c)?;
    }
    Ok(parity)
}

/// Per-bit majority vote over repeated syndrome strings. Returns the voted
/// string and whether any bit was tied (tied bits read 0, so a fully tied
/// vote degrades to "do nothing").
pub fn majority_syndrome<S: AsRef<str>>(rounds: &[S]) -> (String, bool) {
    let Some(first) = rounds.first() else {
        return (String::new(), false);
    };
    let len = first.as_ref().len();
    let mut voted = vec![b'0'; len];
    let mut any_tie = false;
    for (i, slot) in voted.iter_mut().enumerate() {
        let ones = rounds
            .iter()
            .filter(|r| r.as_ref().as_bytes()[i] == b'1')
            .count();
        let zeros = rounds.len() - ones;
        if ones > zeros {
            *slot = b'1';
        } else if ones == zeros {
            any_tie = true;
        }
    }
    (String::from_utf8(voted).expect("ascii"), any_tie)
}

// ======================================================================
// Tests
// ======================================================================
