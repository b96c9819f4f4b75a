//! Dense complex state vectors and the small unitaries applied to them.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * A register of `n` qubits holds `2^n` amplitudes. Qubit `0` is the
//!   **least-significant bit** of the amplitude index, so the basis state
//!   written `"q0 q1 .. q{n-1}"` (leftmost character is qubit 0) lives at
//!   index `sum_j bit_j << j`.
//! * Newly appended qubits take the highest bit positions; appending never
//!   disturbs existing amplitudes.
//! * For a `k`-qubit operator applied to `targets`, bit `j` of the operator's
//!   own basis index corresponds to `targets[j]`. For [`Unitary::cnot`] that
//!   means `targets[0]` is the control and `targets[1]` the target.
//! * Global phase is physical bookkeeping here: it is never stripped, and
//!   [`StateVector::fidelity`] is insensitive to it by construction.
//!
//! States are always kept normalized. Operations that renormalize do so from
//! an explicitly computed branch norm, never by silently rescaling a drifting
//! state; a debug assertion guards the norm invariant after mutating ops.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{Error, Result};

/// Largest register the simulator will allocate by default (2^22 amplitudes,
/// 64 MiB). Constructors take an explicit cap for tests that want a smaller
/// sandbox.
pub const DEFAULT_MAX_QUBITS: usize = 22;

/// Absolute ceiling on any register, regardless of the configured cap
/// (2^26 amplitudes = 1 GiB of `Complex64`). Requests beyond this are
/// rejected up front instead of attempting the allocation.
pub const HARD_MAX_QUBITS: usize = 26;

/// Largest operator arity accepted by [`StateVector::apply_unitary`].
pub const MAX_OPERATOR_QUBITS: usize = 3;

/// Frobenius tolerance on `U†U - I` above which an operator is rejected.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

const NORM_TOLERANCE: f64 = 1e-10;

/// Outcome of a single imperfect measurement: the sampled classical bit and
/// the complex residual admixture `c` left on the measured qubit (the state
/// was left proportional to `|bit> + c |1-bit>` on that qubit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub bit: u8,
    pub residual: Complex64,
}

/// A dense pure state over `n` qubits.
#[derive(Debug, Clone)]
pub struct StateVector {
    n_qubits: usize,
    max_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Builds `|bits>` with the default capacity. `bits` is read leftmost
    /// character = qubit 0, e.g. `new_basis_state(3, "010")` sets qubit 1.
    pub fn new_basis_state(n_qubits: usize, bits: &str) -> Result<Self> {
        Self::with_max_qubits(n_qubits, bits, DEFAULT_MAX_QUBITS)
    }

    /// Same as [`Self::new_basis_state`] with an explicit qubit-count cap.
    pub fn with_max_qubits(n_qubits: usize, bits: &str, max_qubits: usize) -> Result<Self> {
        if max_qubits > HARD_MAX_QUBITS {
            return Err(Error::Capacity {
                requested: max_qubits,
                max: HARD_MAX_QUBITS,
            });
        }
        if n_qubits == 0 || n_qubits > max_qubits {
            return Err(Error::QubitCount {
                n: n_qubits,
                max: max_qubits,
            });
        }
        let index = parse_bits(bits, n_qubits)?;
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[index] = Complex64::ONE;
        Ok(StateVector {
            n_qubits,
            max_qubits,
            amps,
        })
    }

    /// Builds a state from raw amplitudes (length must be a power of two).
    /// The input is normalized; an all-zero vector is rejected.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::BadBitstring {
                bits: format!("<{len} amplitudes>"),
                reason: "amplitude count must be a power of two and at least 2".into(),
            });
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > DEFAULT_MAX_QUBITS {
            return Err(Error::QubitCount {
                n: n_qubits,
                max: DEFAULT_MAX_QUBITS,
            });
        }
        let mut state = StateVector {
            n_qubits,
            max_qubits: DEFAULT_MAX_QUBITS,
            amps,
        };
        let norm = state.norm();
        if norm < 1e-12 {
            return Err(Error::ZeroNorm);
        }
        let inv = 1.0 / norm;
        for a in &mut state.amps {
            *a *= inv;
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn max_qubits(&self) -> usize {
        self.max_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Amplitude of the basis state written as a bitstring (qubit 0 leftmost).
    pub fn amplitude(&self, bits: &str) -> Result<Complex64> {
        let index = parse_bits(bits, self.n_qubits)?;
        Ok(self.amps[index])
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Appends `bits.len()` fresh qubits in the given basis state at the top
    /// of the index space; existing qubits keep their indices.
    pub fn append_qubits(&mut self, bits: &str) -> Result<()> {
        let k = bits.len();
        if k == 0 {
            return Ok(());
        }
        let new_n = self.n_qubits + k;
        if new_n > self.max_qubits {
            return Err(Error::Capacity {
                requested: new_n,
                max: self.max_qubits,
            });
        }
        let pattern = parse_bits(bits, k)?;
        let old_len = self.amps.len();
        let mut amps = vec![Complex64::ZERO; 1 << new_n];
        let offset = pattern << self.n_qubits;
        amps[offset..offset + old_len].copy_from_slice(&self.amps);
        self.amps = amps;
        self.n_qubits = new_n;
        Ok(())
    }

    /// Applies a `k`-qubit unitary (`k <= 3`) to the listed targets. Bit `j`
    /// of the operator index addresses `targets[j]`.
    pub fn apply_unitary(&mut self, targets: &[usize], u: &Unitary) -> Result<()> {
        let k = u.qubit_count();
        if k != targets.len() {
            return Err(Error::OperatorArity {
                got: targets.len(),
                max: MAX_OPERATOR_QUBITS,
            });
        }
        self.check_targets(targets)?;
        let defect = u.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary {
                defect,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        match k {
            1 => self.apply_single(targets[0], &u.m),
            _ => self.apply_multi(targets, u),
        }
        debug_assert!((self.norm() - 1.0).abs() < NORM_TOLERANCE);
        Ok(())
    }

    /// Fast path for diagonal single-qubit operators (pure phase rotations).
    /// `d0`/`d1` must have unit modulus.
    pub fn apply_diagonal(&mut self, qubit: usize, d0: Complex64, d1: Complex64) -> Result<()> {
        self.check_targets(&[qubit])?;
        let defect = (d0.norm_sqr() - 1.0).abs().max((d1.norm_sqr() - 1.0).abs());
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary {
                defect,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        let step = 1usize << qubit;
        for base in (0..self.amps.len()).step_by(step << 1) {
            for low in base..base + step {
                self.amps[low] *= d0;
                self.amps[low + step] *= d1;
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: &[Complex64]) {
        let step = 1usize << qubit;
        for base in (0..self.amps.len()).step_by(step << 1) {
            for low in base..base + step {
                let high = low + step;
                let a = self.amps[low];
                let b = self.amps[high];
                self.amps[low] = m[0] * a + m[1] * b;
                self.amps[high] = m[2] * a + m[3] * b;
            }
        }
    }

    fn apply_multi(&mut self, targets: &[usize], u: &Unitary) {
        let k = targets.len();
        let dim = 1usize << k;
        let mask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let mut idx = [0usize; 8];
        let mut scratch = [Complex64::ZERO; 8];
        // Precompute the index offset of each operator basis state.
        for (s, slot) in idx.iter_mut().enumerate().take(dim) {
            let mut offset = 0usize;
            for (j, &t) in targets.iter().enumerate() {
                if (s >> j) & 1 == 1 {
                    offset |= 1 << t;
                }
            }
            *slot = offset;
        }
        for base in 0..self.amps.len() {
            if base & mask != 0 {
                continue;
            }
            for s in 0..dim {
                scratch[s] = self.amps[base | idx[s]];
            }
            for (r, &offset) in idx.iter().enumerate().take(dim) {
                let row = &u.m[r * dim..(r + 1) * dim];
                let mut acc = Complex64::ZERO;
                for s in 0..dim {
                    acc += row[s] * scratch[s];
                }
                self.amps[base | offset] = acc;
            }
        }
    }

    /// Probability that measuring `qubit` would yield `bit`.
    pub fn bit_probability(&self, qubit: usize, bit: u8) -> Result<f64> {
        self.check_targets(&[qubit])?;
        let step = 1usize << qubit;
        let mut p1 = 0.0;
        for base in (0..self.amps.len()).step_by(step << 1) {
            for low in base..base + step {
                p1 += self.amps[low + step].norm_sqr();
            }
        }
        Ok(if bit == 0 { 1.0 - p1 } else { p1 })
    }

    /// Imperfect projective measurement: samples the outcome from the Born
    /// rule, collapses, then leaves the measured qubit in
    /// `(|bit> + c |1-bit>) / sqrt(1+|c|^2)` with `c` drawn from a circular
    /// complex Gaussian of RMS `c_rms` (`c = 0` exactly when `c_rms = 0`).
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        c_rms: f64,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        let p1 = self.bit_probability(qubit, 1)?;
        let bit = u8::from(rng.random::<f64>() < p1);
        self.collapse(qubit, bit)?;
        let residual = if c_rms > 0.0 {
            // Circular Gaussian with E[|c|^2] = c_rms^2.
            let comp = Normal::new(0.0, c_rms / std::f64::consts::SQRT_2)
                .expect("finite non-negative std dev");
            Complex64::new(comp.sample(rng), comp.sample(rng))
        } else {
            Complex64::ZERO
        };
        if residual != Complex64::ZERO {
            self.admix_residual(qubit, bit, residual)?;
        }
        debug_assert!((self.norm() - 1.0).abs() < NORM_TOLERANCE);
        Ok(MeasurementOutcome { bit, residual })
    }

    /// Forces `qubit` to `bit`, returning the probability of that branch and
    /// renormalizing the state. The state is left untouched (and an error
    /// returned) if the branch has no support.
    pub fn postselect_qubit(&mut self, qubit: usize, bit: u8) -> Result<f64> {
        let p = self.bit_probability(qubit, bit)?;
        if p < 1e-300 {
            return Err(Error::ImpossibleBranch);
        }
        self.collapse(qubit, bit)?;
        Ok(p)
    }

    fn collapse(&mut self, qubit: usize, bit: u8) -> Result<()> {
        let step = 1usize << qubit;
        let mut kept = 0.0;
        for base in (0..self.amps.len()).step_by(step << 1) {
            for low in base..base + step {
                let (keep, drop) = if bit == 0 {
                    (low, low + step)
                } else {
                    (low + step, low)
                };
                kept += self.amps[keep].norm_sqr();
                self.amps[drop] = Complex64::ZERO;
            }
        }
        if kept < 1e-300 {
            return Err(Error::ImpossibleBranch);
        }
        let inv = 1.0 / kept.sqrt();
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(())
    }

    /// Adds the post-measurement residual: the qubit currently collapsed to
    /// `|bit>` becomes `(|bit> + c |1-bit>) / sqrt(1+|c|^2)`.
    pub fn admix_residual(&mut self, qubit: usize, bit: u8, c: Complex64) -> Result<()> {
        self.check_targets(&[qubit])?;
        let step = 1usize << qubit;
        for base in (0..self.amps.len()).step_by(step << 1) {
            for low in base..base + step {
                let (src, dst) = if bit == 0 {
                    (low, low + step)
                } else {
                    (low + step, low)
                };
                self.amps[dst] = c * self.amps[src];
            }
        }
        let inv = 1.0 / (1.0 + c.norm_sqr()).sqrt();
        for a in &mut self.amps {
            *a *= inv;
        }
        Ok(())
    }

    /// Collapses `qubit` to `bit` and removes it from the register in one
    /// deterministic step, returning the branch probability. Used for exact
    /// branch enumeration; the sampling counterpart is [`Self::discard_qubit`].
    pub fn postselect_and_remove(&mut self, qubit: usize, bit: u8) -> Result<f64> {
        if self.n_qubits == 1 {
            return Err(Error::LastQubit);
        }
        let p = self.postselect_qubit(qubit, bit)?;
        self.remove_definite_qubit(qubit, bit);
        Ok(p)
    }

    /// Imperfect measurement followed by tracing the qubit out of the
    /// register. After collapse the register factorizes, so removal is exact;
    /// the residual admixture leaves with the discarded qubit.
    pub fn discard_qubit<R: Rng + ?Sized>(
        &mut self,
        qubit: usize,
        c_rms: f64,
        rng: &mut R,
    ) -> Result<MeasurementOutcome> {
        if self.n_qubits == 1 {
            return Err(Error::LastQubit);
        }
        let outcome = self.measure_qubit(qubit, c_rms, rng)?;
        self.remove_definite_qubit(qubit, outcome.bit);
        Ok(outcome)
    }

    /// Removes a qubit whose reduced state is `|bit>` up to a residual that is
    /// uncorrelated with the rest (the post-measurement situation). Keeps the
    /// `bit` block and renormalizes by its actual norm.
    fn remove_definite_qubit(&mut self, qubit: usize, bit: u8) {
        let step = 1usize << qubit;
        let low_mask = step - 1;
        let mut amps = vec![Complex64::ZERO; self.amps.len() >> 1];
        let sel = if bit == 1 { step } else { 0 };
        let mut kept = 0.0;
        for (j, slot) in amps.iter_mut().enumerate() {
            let src = ((j & !low_mask) << 1) | (j & low_mask) | sel;
            *slot = self.amps[src];
            kept += slot.norm_sqr();
        }
        let inv = 1.0 / kept.sqrt();
        for a in &mut amps {
            *a *= inv;
        }
        self.amps = amps;
        self.n_qubits -= 1;
    }

    /// Squared overlap `|<reference|self>|^2`; insensitive to global phase.
    pub fn fidelity(&self, reference: &Self) -> Result<f64> {
        Ok(self.overlap(reference)?.norm_sqr())
    }

    /// Inner product `<reference|self>`.
    pub fn overlap(&self, reference: &Self) -> Result<Complex64> {
        if self.n_qubits != reference.n_qubits {
            return Err(Error::DimensionMismatch {
                left: reference.n_qubits,
                right: self.n_qubits,
            });
        }
        let mut acc = Complex64::ZERO;
        for (a, r) in self.amps.iter().zip(reference.amps.iter()) {
            acc += r.conj() * a;
        }
        Ok(acc)
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(Error::TargetOutOfRange {
                    qubit: t,
                    n: self.n_qubits,
                });
            }
            if targets[i + 1..].contains(&t) {
                return Err(Error::DuplicateTargets {
                    targets: targets.to_vec(),
                });
            }
        }
        Ok(())
    }
}

fn parse_bits(bits: &str, expected: usize) -> Result<usize> {
    if bits.len() != expected {
        return Err(Error::BadBitstring {
            bits: bits.to_string(),
            reason: format!("expected {expected} characters, got {}", bits.len()),
        });
    }
    let mut index = 0usize;
    for (j, ch) in bits.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => index |= 1 << j,
            _ => {
                return Err(Error::BadBitstring {
                    bits: bits.to_string(),
                    reason: format!("invalid character {ch:?}"),
                })
            }
        }
    }
    Ok(index)
}

/// A dense `2^k x 2^k` operator over `k <= 3` qubits, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    k: usize,
    m: Vec<Complex64>,
}

impl Unitary {
    /// Wraps raw row-major entries, rejecting matrices that are not unitary
    /// within [`UNITARITY_TOLERANCE`].
    pub fn from_entries(k: usize, entries: Vec<Complex64>) -> Result<Self> {
        if k == 0 || k > MAX_OPERATOR_QUBITS {
            return Err(Error::OperatorArity {
                got: k,
                max: MAX_OPERATOR_QUBITS,
            });
        }
        let dim = 1usize << k;
        if entries.len() != dim * dim {
            return Err(Error::OperatorArity {
                got: entries.len(),
                max: dim * dim,
            });
        }
        let u = Unitary { k, m: entries };
        let defect = u.unitarity_defect();
        if defect > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary {
                defect,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        Ok(u)
    }

    /// Raw constructor for internal use where unitarity is guaranteed by
    /// construction (rotations, Pauli strings, products of unitaries).
    pub(crate) fn from_entries_unchecked(k: usize, m: Vec<Complex64>) -> Self {
        Unitary { k, m }
    }

    pub fn qubit_count(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        1 << self.k
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row * self.dim() + col]
    }

    /// Frobenius norm of `U†U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let dim = self.dim();
        let mut acc = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let mut dot = Complex64::ZERO;
                for j in 0..dim {
                    dot += self.m[j * dim + r].conj() * self.m[j * dim + c];
                }
                if r == c {
                    dot -= Complex64::ONE;
                }
                acc += dot.norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn identity(k: usize) -> Self {
        let dim = 1usize << k;
        let mut m = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            m[r * dim + r] = Complex64::ONE;
        }
        Unitary { k, m }
    }

    /// Rotation about the x axis: `[[cos(t/2), -i sin(t/2)], [-i sin(t/2), cos(t/2)]]`.
    pub fn rx(theta: f64) -> Self {
        Self::rotation_about([1.0, 0.0, 0.0], theta)
    }

    /// Rotation about the y axis: `[[cos(t/2), -sin(t/2)], [sin(t/2), cos(t/2)]]`.
    pub fn ry(theta: f64) -> Self {
        Self::rotation_about([0.0, 1.0, 0.0], theta)
    }

    /// Rotation about the z axis: `diag(e^{-i t/2}, e^{+i t/2})`.
    pub fn rz(theta: f64) -> Self {
        Self::rotation_about([0.0, 0.0, 1.0], theta)
    }

    /// `cos(a/2) I - i sin(a/2) (n . sigma)` for a unit axis `n`.
    pub fn rotation_about(axis: [f64; 3], angle: f64) -> Self {
        let [nx, ny, nz] = axis;
        let c = (angle / 2.0).cos();
        let s = (angle / 2.0).sin();
        let i = Complex64::I;
        Unitary {
            k: 1,
            m: vec![
                Complex64::new(c, 0.0) - i * s * nz,
                -i * s * Complex64::new(nx, -ny),
                -i * s * Complex64::new(nx, ny),
                Complex64::new(c, 0.0) + i * s * nz,
            ],
        }
    }

    /// The bit-flip admixture `(I - i eps X) / sqrt(1 + eps^2)`: an exact
    /// x rotation whose half-angle has tangent `eps`, so a flipped component
    /// of relative amplitude `eps` rides on top of the unchanged state.
    pub fn x_error(eps: f64) -> Self {
        let norm = 1.0 / (1.0 + eps * eps).sqrt();
        let c = Complex64::new(norm, 0.0);
        let s = Complex64::new(0.0, -eps * norm);
        Unitary {
            k: 1,
            m: vec![c, s, s, c],
        }
    }

    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Unitary {
            k: 1,
            m: vec![h, h, h, -h],
        }
    }

    pub fn pauli_x() -> Self {
        Unitary {
            k: 1,
            m: vec![
                Complex64::ZERO,
                Complex64::ONE,
                Complex64::ONE,
                Complex64::ZERO,
            ],
        }
    }

    pub fn pauli_y() -> Self {
        Unitary {
            k: 1,
            m: vec![
                Complex64::ZERO,
                -Complex64::I,
                Complex64::I,
                Complex64::ZERO,
            ],
        }
    }

    pub fn pauli_z() -> Self {
        Unitary {
            k: 1,
            m: vec![
                Complex64::ONE,
                Complex64::ZERO,
                Complex64::ZERO,
                -Complex64::ONE,
            ],
        }
    }

    /// CNOT with the control on operator bit 0 (`targets[0]`) and the target
    /// on operator bit 1 (`targets[1]`).
    pub fn cnot() -> Self {
        let mut m = vec![Complex64::ZERO; 16];
        // |c=0,t> fixed; |c=1,t> flips t. Index = c + 2t.
        m[0] = Complex64::ONE; // |00> -> |00>
        m[3 * 4 + 1] = Complex64::ONE; // |01> -> |11>
        m[2 * 4 + 2] = Complex64::ONE; // |10> -> |10>
        m[4 + 3] = Complex64::ONE; // |11> -> |01>
        Unitary { k: 2, m }
    }

    /// Controlled-Z (symmetric in its two qubits).
    pub fn cz() -> Self {
        let mut m = vec![Complex64::ZERO; 16];
        m[0] = Complex64::ONE;
        m[4 + 1] = Complex64::ONE;
        m[2 * 4 + 2] = Complex64::ONE;
        m[3 * 4 + 3] = -Complex64::ONE;
        Unitary { k: 2, m }
    }

    /// The correlated two-qubit rotation `exp(-i angle X (x) X)`.
    pub fn xx_rotation(angle: f64) -> Self {
        let c = Complex64::new(angle.cos(), 0.0);
        let s = Complex64::new(0.0, -angle.sin());
        let z = Complex64::ZERO;
        Unitary {
            k: 2,
            m: vec![c, z, z, s, z, c, s, z, z, s, c, z, s, z, z, c],
        }
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Unitary) -> Result<Self> {
        if self.k != rhs.k {
            return Err(Error::DimensionMismatch {
                left: self.k,
                right: rhs.k,
            });
        }
        let dim = self.dim();
        let mut m = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for j in 0..dim {
                let a = self.m[r * dim + j];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..dim {
                    m[r * dim + c] += a * rhs.m[j * dim + c];
                }
            }
        }
        Ok(Unitary { k: self.k, m })
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let dim = self.dim();
        let mut m = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                m[c * dim + r] = self.m[r * dim + c].conj();
            }
        }
        Unitary { k: self.k, m }
    }
}

// ======================================================================
// Tests
// ======================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const EPS: f64 = 1e-12;

    fn assert_close(a: Complex64, b: Complex64) {
        assert!(
            (a - b).norm() < EPS,
            "expected {b:?}, got {a:?} (|diff| = {})",
            (a - b).norm()
        );
    }

    // ---------- basis construction and indexing ----------

    #[test]
    fn basis_state_uses_qubit0_as_least_significant_bit() {
        let s = StateVector::new_basis_state(3, "010").unwrap();
        // Qubit 1 set -> index 2.
        for (idx, amp) in s.amplitudes().iter().enumerate() {
            let expected = if idx == 2 {
                Complex64::ONE
            } else {
                Complex64::ZERO
            };
            assert_close(*amp, expected);
        }
        assert_close(s.amplitude("010").unwrap(), Complex64::ONE);
    }

    #[test]
    fn register_cap_above_hard_ceiling_is_rejected() {
        let err = StateVector::with_max_qubits(2, "00", HARD_MAX_QUBITS + 4).unwrap_err();
        match err {
            Error::Capacity { requested, max } => {
                assert_eq!(requested, HARD_MAX_QUBITS + 4);
                assert_eq!(max, HARD_MAX_QUBITS);
            }
            other => panic!("expected Capacity error, got {other:?}"),
        }
        // At the ceiling itself the request is accepted (capacity is lazy:
        // only 2^n_qubits amplitudes are allocated, not 2^max_qubits).
        let s = StateVector::with_max_qubits(2, "00", HARD_MAX_QUBITS).unwrap();
        assert_eq!(s.max_qubits(), HARD_MAX_QUBITS);
    }

    #[test]
    fn append_places_new_qubits_at_high_indices() {
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.append_qubits("1").unwrap();
        // |01>: qubit 0 = 0, qubit 1 = 1 -> index 2.
        assert_eq!(s.n_qubits(), 2);
        assert_close(s.amplitude("01").unwrap(), Complex64::ONE);
        assert_close(s.amplitudes()[2], Complex64::ONE);
    }

    #[test]
    fn append_preserves_existing_superposition() {
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::hadamard()).unwrap();
        s.append_qubits("00").unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(s.amplitude("000").unwrap(), Complex64::new(r, 0.0));
        assert_close(s.amplitude("100").unwrap(), Complex64::new(r, 0.0));
    }

    #[test]
    fn qubit_count_limits_are_enforced() {
        assert!(matches!(
            StateVector::new_basis_state(0, ""),
            Err(Error::QubitCount { .. })
        ));
        assert!(matches!(
            StateVector::new_basis_state(23, &"0".repeat(23)),
            Err(Error::QubitCount { n: 23, max: 22 })
        ));
        let mut s = StateVector::with_max_qubits(3, "000", 4).unwrap();
        assert!(matches!(
            s.append_qubits("00"),
            Err(Error::Capacity {
                requested: 5,
                max: 4
            })
        ));
    }

    #[test]
    fn bad_bitstrings_are_rejected() {
        assert!(matches!(
            StateVector::new_basis_state(2, "012"),
            Err(Error::BadBitstring { .. })
        ));
        assert!(matches!(
            StateVector::new_basis_state(2, "0x"),
            Err(Error::BadBitstring { .. })
        ));
    }

    // ---------- unitary application ----------

    #[test]
    fn rx_matches_direct_two_by_two_multiplication() {
        // Oracle: multiply the Rx(0.2) matrix against (1, 0) by hand.
        let theta: f64 = 0.2;
        let expected0 = Complex64::new((theta / 2.0).cos(), 0.0);
        let expected1 = Complex64::new(0.0, -(theta / 2.0).sin());

        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::rx(theta)).unwrap();
        assert_close(s.amplitude("0").unwrap(), expected0);
        assert_close(s.amplitude("1").unwrap(), expected1);
    }

    #[test]
    fn fidelity_of_rotated_state_is_cos_squared_half_angle() {
        let theta: f64 = 0.2;
        let reference = StateVector::new_basis_state(1, "0").unwrap();
        let mut s = reference.clone();
        s.apply_unitary(&[0], &Unitary::rx(theta)).unwrap();
        let f = s.fidelity(&reference).unwrap();
        assert!((f - (theta / 2.0).cos().powi(2)).abs() < EPS);
    }

    #[test]
    fn global_phase_is_kept_but_fidelity_ignores_it() {
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::rz(0.7)).unwrap();
        // Rz(0.7)|0> = e^{-i 0.35} |0>: the phase stays on the amplitude...
        let expected = Complex64::from_polar(1.0, -0.35);
        assert_close(s.amplitude("0").unwrap(), expected);
        // ...and fidelity against |0> is still exactly 1.
        let reference = StateVector::new_basis_state(1, "0").unwrap();
        assert!((s.fidelity(&reference).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn cnot_convention_control_is_operator_bit_zero() {
        // targets[0] = control (qubit 2), targets[1] = target (qubit 0).
        let mut s = StateVector::new_basis_state(3, "001").unwrap();
        s.apply_unitary(&[2, 0], &Unitary::cnot()).unwrap();
        assert_close(s.amplitude("101").unwrap(), Complex64::ONE);
        // Control clear: nothing happens.
        let mut s = StateVector::new_basis_state(3, "100").unwrap();
        s.apply_unitary(&[2, 0], &Unitary::cnot()).unwrap();
        assert_close(s.amplitude("100").unwrap(), Complex64::ONE);
    }

    #[test]
    fn xx_rotation_mixes_the_double_flip_component() {
        let eps = 0.3;
        let mut s = StateVector::new_basis_state(2, "00").unwrap();
        s.apply_unitary(&[0, 1], &Unitary::xx_rotation(eps))
            .unwrap();
        assert_close(s.amplitude("00").unwrap(), Complex64::new(eps.cos(), 0.0));
        assert_close(s.amplitude("11").unwrap(), Complex64::new(0.0, -eps.sin()));
    }

    #[test]
    fn non_unitary_operator_is_rejected() {
        let shear = vec![
            Complex64::ONE,
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ONE,
        ];
        assert!(matches!(
            Unitary::from_entries(1, shear),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn duplicate_and_out_of_range_targets_are_rejected() {
        let mut s = StateVector::new_basis_state(2, "00").unwrap();
        assert!(matches!(
            s.apply_unitary(&[0, 0], &Unitary::cnot()),
            Err(Error::DuplicateTargets { .. })
        ));
        assert!(matches!(
            s.apply_unitary(&[0, 5], &Unitary::cnot()),
            Err(Error::TargetOutOfRange { qubit: 5, n: 2 })
        ));
    }

    #[test]
    fn three_qubit_operator_via_kron_of_singles_matches_sequential() {
        // X on q0, H on q1 applied as one padded 3-qubit operator must equal
        // the sequential single-qubit applications.
        let mut direct = StateVector::new_basis_state(3, "000").unwrap();
        direct.apply_unitary(&[0], &Unitary::pauli_x()).unwrap();
        direct.apply_unitary(&[1], &Unitary::hadamard()).unwrap();

        // Build X (x) H (x) I as an explicit 8x8 (operator bit 0 = X target).
        let x = Unitary::pauli_x();
        let h = Unitary::hadamard();
        let id = Unitary::identity(1);
        let mut m = vec![Complex64::ZERO; 64];
        for r in 0..8 {
            for c in 0..8 {
                m[r * 8 + c] = x.entry(r & 1, c & 1)
                    * h.entry((r >> 1) & 1, (c >> 1) & 1)
                    * id.entry(r >> 2, c >> 2);
            }
        }
        let combined = Unitary::from_entries(3, m).unwrap();
        let mut batched = StateVector::new_basis_state(3, "000").unwrap();
        batched.apply_unitary(&[0, 1, 2], &combined).unwrap();

        for (a, b) in batched.amplitudes().iter().zip(direct.amplitudes()) {
            assert_close(*a, *b);
        }
    }

    #[test]
    fn diagonal_fast_path_matches_general_rz() {
        let mut a = StateVector::new_basis_state(2, "00").unwrap();
        a.apply_unitary(&[0], &Unitary::hadamard()).unwrap();
        a.apply_unitary(&[1], &Unitary::hadamard()).unwrap();
        let mut b = a.clone();
        let theta = 0.421;
        a.apply_unitary(&[1], &Unitary::rz(theta)).unwrap();
        b.apply_diagonal(
            1,
            Complex64::from_polar(1.0, -theta / 2.0),
            Complex64::from_polar(1.0, theta / 2.0),
        )
        .unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert_close(*x, *y);
        }
    }

    // ---------- measurement, post-selection, discard ----------

    #[test]
    fn perfect_measurement_of_basis_state_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        let out = s.measure_qubit(0, 0.0, &mut rng).unwrap();
        assert_eq!(out.bit, 0);
        assert_eq!(out.residual, Complex64::ZERO);
        assert_close(s.amplitude("0").unwrap(), Complex64::ONE);
    }

    #[test]
    fn residual_admixture_leaves_opposite_component() {
        // Collapse (|0>+|1>)/sqrt(2) to bit 0, then admix c = 0.01:
        // the state must be proportional to |0> + 0.01 |1>.
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::hadamard()).unwrap();
        s.postselect_qubit(0, 0).unwrap();
        let c = Complex64::new(0.01, 0.0);
        s.admix_residual(0, 0, c).unwrap();
        let norm = (1.0 + 0.0001f64).sqrt();
        assert_close(s.amplitude("0").unwrap(), Complex64::new(1.0 / norm, 0.0));
        assert_close(s.amplitude("1").unwrap(), Complex64::new(0.01 / norm, 0.0));
    }

    #[test]
    fn measurement_statistics_follow_born_rule() {
        // P(1) for Ry(0.9)|0> is sin^2(0.45); check a seeded frequency.
        let theta: f64 = 0.9;
        let p1 = (theta / 2.0).sin().powi(2);
        let mut rng = ChaCha12Rng::seed_from_u64(20_080_904);
        let trials = 100_000;
        let mut ones = 0u32;
        let base = {
            let mut s = StateVector::new_basis_state(1, "0").unwrap();
            s.apply_unitary(&[0], &Unitary::ry(theta)).unwrap();
            s
        };
        for _ in 0..trials {
            let mut s = base.clone();
            ones += u32::from(s.measure_qubit(0, 0.0, &mut rng).unwrap().bit);
        }
        let freq = f64::from(ones) / trials as f64;
        let sigma = (p1 * (1.0 - p1) / trials as f64).sqrt();
        assert!(
            (freq - p1).abs() < 4.0 * sigma,
            "freq {freq} vs p {p1} (4 sigma = {})",
            4.0 * sigma
        );
    }

    #[test]
    fn postselect_returns_branch_probability() {
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::ry(0.9)).unwrap();
        s.append_qubits("0").unwrap();
        let p = s.postselect_qubit(0, 1).unwrap();
        assert!((p - (0.45f64).sin().powi(2)).abs() < EPS);
        assert_close(s.amplitude("10").unwrap(), Complex64::ONE);
        // Impossible branch: qubit 1 is definitely 0.
        assert!(matches!(
            s.postselect_qubit(1, 1),
            Err(Error::ImpossibleBranch)
        ));
    }

    #[test]
    fn discard_removes_qubit_and_keeps_partner_state_exact() {
        // On a product state |psi> (x) |0>, discarding the second qubit must
        // return |psi> exactly, residual admixture or not.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        s.apply_unitary(&[0], &Unitary::ry(1.1)).unwrap();
        let reference = s.clone();
        s.append_qubits("0").unwrap();
        let out = s.discard_qubit(1, 0.05, &mut rng).unwrap();
        assert_eq!(out.bit, 0);
        assert_eq!(s.n_qubits(), 1);
        assert!((s.fidelity(&reference).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn discard_after_entangling_collapses_partner() {
        // Bell pair: discarding one side leaves the other in the measured bit.
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut s = StateVector::new_basis_state(2, "00").unwrap();
        s.apply_unitary(&[0], &Unitary::hadamard()).unwrap();
        s.apply_unitary(&[0, 1], &Unitary::cnot()).unwrap();
        let out = s.discard_qubit(1, 0.0, &mut rng).unwrap();
        let expect = if out.bit == 0 { "0" } else { "1" };
        let reference = StateVector::new_basis_state(1, expect).unwrap();
        assert!((s.fidelity(&reference).unwrap() - 1.0).abs() < EPS);
    }

    #[test]
    fn last_qubit_cannot_be_discarded() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let mut s = StateVector::new_basis_state(1, "0").unwrap();
        assert!(matches!(
            s.discard_qubit(0, 0.0, &mut rng),
            Err(Error::LastQubit)
        ));
    }

    #[test]
    fn fidelity_requires_matching_dimensions() {
        let a = StateVector::new_basis_state(1, "0").unwrap();
        let b = StateVector::new_basis_state(2, "00").unwrap();
        assert!(matches!(
            a.fidelity(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    // ---------- property-based invariants ----------

    fn arbitrary_rotation() -> impl Strategy<Value = Unitary> {
        (
            -std::f64::consts::PI..std::f64::consts::PI,
            0.0..std::f64::consts::PI,
            -std::f64::consts::PI..std::f64::consts::PI,
        )
            .prop_map(|(phi, polar, angle)| {
                let axis = [
                    polar.sin() * phi.cos(),
                    polar.sin() * phi.sin(),
                    polar.cos(),
                ];
                Unitary::rotation_about(axis, angle)
            })
    }

    proptest! {
        #[test]
        fn norm_is_preserved_by_random_rotation_circuits(
            seed in 0u64..1000,
            ops in proptest::collection::vec((0usize..4, arbitrary_rotation()), 1..24),
        ) {
            let _ = seed;
            let mut s = StateVector::new_basis_state(4, "0000").unwrap();
            for (q, u) in &ops {
                s.apply_unitary(&[*q], u).unwrap();
            }
            prop_assert!((s.norm() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn unitary_then_dagger_is_identity(
            q in 0usize..3,
            u in arbitrary_rotation(),
        ) {
            let mut s = StateVector::new_basis_state(3, "000").unwrap();
            s.apply_unitary(&[1], &Unitary::hadamard()).unwrap();
            s.apply_unitary(&[2], &Unitary::ry(0.4)).unwrap();
            let before = s.clone();
            s.apply_unitary(&[q], &u).unwrap();
            s.apply_unitary(&[q], &u.dagger()).unwrap();
            for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
                prop_assert!((a - b).norm() < 1e-10);
            }
        }

        #[test]
        fn measurement_residual_magnitude_tracks_its_draw(
            seed in 0u64..500,
        ) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut s = StateVector::new_basis_state(1, "0").unwrap();
            s.apply_unitary(&[0], &Unitary::hadamard()).unwrap();
            let out = s.measure_qubit(0, 0.1, &mut rng).unwrap();
            // The opposite-bit amplitude must equal c / sqrt(1+|c|^2).
            let opposite = if out.bit == 0 { "1" } else { "0" };
            let got = s.amplitude(opposite).unwrap();
            let expected = out.residual / (1.0 + out.residual.norm_sqr()).sqrt();
            prop_assert!((got - expected).norm() < 1e-12);
        }
    }
}
