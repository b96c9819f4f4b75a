//! The imperfection processes. Everything here acts on pure states: noise is
//! realized as explicitly sampled unitaries (random small rotations, jittered
//! gates) or as the projective part of measurement with an imperfect residual.
//! Ensemble behavior (dephasing, depolarization) emerges from averaging
//! trajectories, never from density-matrix bookkeeping.
//!
//! Four processes are modeled:
//!
//! * **Idle rotations** — every live qubit receives one small random rotation
//!   per time step, with Gaussian angle of RMS [`NoiseModel::eps_step`] and an
//!   axis drawn according to [`AxisMode`].
//! * **Gate jitter** — every applied gate is `exp(-i dH) U_ideal`, where `dH`
//!   is a random Hermitian combination of the non-identity Pauli strings on
//!   the gate's qubits, each coefficient Gaussian with RMS
//!   `sigma_gate / sqrt(4^k - 1)` so the total perturbation strength is
//!   `sigma_gate` regardless of arity.
//! * **Measurement residual** — measurements leave `|bit> + c |1-bit>` with
//!   `c` a circular complex Gaussian of RMS [`NoiseModel::c_rms`] (implemented
//!   in [`StateVector::measure_qubit`]; the durations live here).
//! * **Discrete gate failures** — the conventional benchmark channel in which
//!   a gate is preceded, with probability `gamma2` (two-qubit) or `gamma1`
//!   (single-qubit), by one of the `4^k - 1` non-identity Pauli strings chosen
//!   uniformly. This is the idealized model the continuous one is compared
//!   against; the executor only invokes it in the discrete-baseline regime.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, UnitCircle, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::statevec::{StateVector, Unitary};
use crate::{Error, Result};

/// Which rotation axes the per-step noise explores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisMode {
    /// Uniformly random axis in the equatorial x-y plane.
    XyPlane,
    /// Fixed z axis (pure dephasing).
    ZOnly,
    /// Fixed x axis (pure bit-flip drift).
    XOnly,
    /// Uniformly random axis on the full sphere.
    Isotropic,
}

/// All noise scales and operation durations for one run.
///
/// Durations are in time steps: a gate occupies `d_gate` steps and a
/// measurement `d_meas` steps, during which every live qubit keeps receiving
/// idle rotations. Setting every scale to zero makes all processes exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// RMS rotation angle per qubit per time step.
    pub eps_step: f64,
    pub axis_mode: AxisMode,
    /// Total RMS strength of the Hermitian gate perturbation.
    pub sigma_gate: f64,
    /// RMS of the complex residual left by a measurement.
    pub c_rms: f64,
    /// Gate duration in time steps.
    pub d_gate: u32,
    /// Measurement duration in time steps.
    pub d_meas: u32,
    /// Single-qubit discrete failure probability (baseline regime only).
    pub gamma1: f64,
    /// Two-qubit discrete failure probability (baseline regime only).
    pub gamma2: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            eps_step: 1e-3,
            axis_mode: AxisMode::XyPlane,
            sigma_gate: 1e-3,
            c_rms: 1e-3,
            d_gate: 1,
            d_meas: 10,
            gamma1: 1e-4,
            gamma2: 1e-3,
        }
    }
}

impl NoiseModel {
    /// A model with every scale zero and zero durations: all operations exact
    /// and instantaneous. Useful as the baseline for oracle tests.
    pub fn noiseless() -> Self {
        NoiseModel {
            eps_step: 0.0,
            axis_mode: AxisMode::XyPlane,
            sigma_gate: 0.0,
            c_rms: 0.0,
            d_gate: 0,
            d_meas: 0,
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("noise.eps_step", self.eps_step),
            ("noise.sigma_gate", self.sigma_gate),
            ("noise.c_rms", self.c_rms),
            ("noise.gamma1", self.gamma1),
            ("noise.gamma2", self.gamma2),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        for (name, v) in [("noise.gamma1", self.gamma1), ("noise.gamma2", self.gamma2)] {
            if v > 1.0 {
                return Err(Error::config(format!(
                    "{name} is a probability and must be <= 1, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One sampled idle kick: a rotation axis and a signed angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEvent {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl RotationEvent {
    pub fn unitary(&self) -> Unitary {
        Unitary::rotation_about(self.axis, self.angle)
    }
}

/// Draws one idle-noise rotation: angle ~ N(0, eps_step^2), axis per the
/// model's [`AxisMode`]. With `eps_step = 0` the event is the identity
/// (angle 0) and no randomness is consumed.
pub fn sample_rotation<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> RotationEvent {
    if model.eps_step == 0.0 {
        return RotationEvent {
            axis: [0.0, 0.0, 1.0],
            angle: 0.0,
        };
    }
    let angle = Normal::new(0.0, model.eps_step)
        .expect("finite positive std dev")
        .sample(rng);
    let axis = match model.axis_mode {
        AxisMode::XOnly => [1.0, 0.0, 0.0],
        AxisMode::ZOnly => [0.0, 0.0, 1.0],
        AxisMode::XyPlane => {
            let [x, y]: [f64; 2] = UnitCircle.sample(rng);
            [x, y, 0.0]
        }
        AxisMode::Isotropic => UnitSphere.sample(rng),
    };
    RotationEvent { axis, angle }
}

/// Applies one rotation event to a qubit, using the diagonal fast path when
/// the axis is z.
pub fn apply_rotation(state: &mut StateVector, qubit: usize, event: &RotationEvent) -> Result<()> {
    if event.angle == 0.0 {
        // Identity; still a valid "kick", but nothing to multiply.
        return Ok(());
    }
    if event.axis[0] == 0.0 && event.axis[1] == 0.0 {
        let half = event.angle * 0.5 * event.axis[2];
        return state.apply_diagonal(
            qubit,
            Complex64::from_polar(1.0, -half),
            Complex64::from_polar(1.0, half),
        );
    }
    state.apply_unitary(&[qubit], &event.unitary())
}

/// `steps` rounds of one independent random rotation on each listed qubit.
/// Qubits are kicked in the order given; reordering changes individual
/// trajectories but not any ensemble distribution.
pub fn apply_idle_noise<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubits: &[usize],
    steps: u32,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<()> {
    for _ in 0..steps {
        for &q in qubits {
            let event = sample_rotation(model, rng);
            apply_rotation(state, q, &event)?;
        }
    }
    Ok(())
}

/// Returns the jittered version of an ideal gate: `exp(-i dH) * U_ideal`,
/// with `dH = sum_P g_P P` over the `4^k - 1` non-identity Pauli strings and
/// `g_P ~ N(0, (sigma_gate / sqrt(4^k - 1))^2)`. With `sigma_gate = 0` the
/// ideal gate is returned unchanged.
pub fn jitter_gate<R: Rng + ?Sized>(
    ideal: &Unitary,
    model: &NoiseModel,
    rng: &mut R,
) -> Result<Unitary> {
    if model.sigma_gate == 0.0 {
        return Ok(ideal.clone());
    }
    let k = ideal.qubit_count();
    let dim = 1usize << k;
    let n_paulis = (1usize << (2 * k)) - 1; // 4^k - 1
    let coeff = Normal::new(0.0, model.sigma_gate / (n_paulis as f64).sqrt())
        .expect("finite positive std dev");
    let mut h = vec![Complex64::ZERO; dim * dim];
    for p in 1..=n_paulis {
        add_pauli_string(&mut h, k, p, coeff.sample(rng));
    }
    let e = expm_neg_i_hermitian(&h, dim);
    let perturbation = Unitary::from_entries_unchecked(k, e);
    let jittered = perturbation.matmul(ideal)?;
    let defect = jittered.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary {
            defect,
            tolerance: 1e-10,
        });
    }
    Ok(jittered)
}

/// Discrete baseline channel: with probability `gamma2` (two targets) or
/// `gamma1` (one target) applies a uniformly chosen non-identity Pauli string
/// on the targets. Returns the 1-based Pauli index applied, if any.
pub fn apply_discrete_gate_failure<R: Rng + ?Sized>(
    state: &mut StateVector,
    targets: &[usize],
    model: &NoiseModel,
    rng: &mut R,
) -> Result<Option<usize>> {
    let gamma = match targets.len() {
        1 => model.gamma1,
        2 => model.gamma2,
        n => {
            return Err(Error::OperatorArity { got: n, max: 2 });
        }
    };
    if gamma == 0.0 || rng.random::<f64>() >= gamma {
        return Ok(None);
    }
    let n_paulis = (1usize << (2 * targets.len())) - 1;
    let index = rng.random_range(1..=n_paulis);
    let pauli = pauli_string_unitary(targets.len(), index);
    state.apply_unitary(targets, &pauli)?;
    Ok(Some(index))
}

/// The `index`-th Pauli string on `k` qubits, with `index` read base-4
/// (digit j = slot j; 0 = I, 1 = X, 2 = Y, 3 = Z). Index 0 is the identity.
pub fn pauli_string_unitary(k: usize, index: usize) -> Unitary {
    let dim = 1usize << k;
    let mut m = vec![Complex64::ZERO; dim * dim];
    add_pauli_string(&mut m, k, index, 1.0);
    Unitary::from_entries_unchecked(k, m)
}

/// Adds `g * P_index` into a dense matrix. Each Pauli string has exactly one
/// nonzero entry per row: column = row XOR (bits where the digit is X or Y),
/// value = product of per-qubit phases.
fn add_pauli_string(m: &mut [Complex64], k: usize, index: usize, g: f64) {
    let dim = 1usize << k;
    for r in 0..dim {
        let mut col = r;
        let mut val = Complex64::new(g, 0.0);
        let mut digits = index;
        for j in 0..k {
            let d = digits & 3;
            digits >>= 2;
            let bit = (r >> j) & 1;
            match d {
                0 => {}
                1 => col ^= 1 << j,
                2 => {
                    col ^= 1 << j;
                    val *= if bit == 0 {
                        -Complex64::I
                    } else {
                        Complex64::I
                    };
                }
                _ => {
                    if bit == 1 {
                        val = -val;
                    }
                }
            }
        }
        m[r * dim + col] += val;
    }
}

/// `exp(-i H)` for Hermitian `H`, via scaling-and-squaring with a Taylor
/// series. The argument norms seen here are small (gate jitter), so the
/// series reaches machine precision in a handful of terms; scaling keeps it
/// robust for larger inputs.
fn expm_neg_i_hermitian(h: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut a: Vec<Complex64> = h.iter().map(|z| -Complex64::I * z).collect();
    let fro: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut squarings = 0u32;
    if fro > 0.25 {
        squarings = (fro / 0.25).log2().ceil() as u32;
        let scale = 0.5f64.powi(squarings as i32);
        for z in &mut a {
            *z *= scale;
        }
    }
    // sum = I + A + A^2/2! + ...
    let mut sum = identity_mat(dim);
    let mut term = identity_mat(dim);
    for order in 1..=24u32 {
        term = mat_mul(&term, &a, dim);
        let inv = 1.0 / f64::from(order);
        let mut largest = 0.0f64;
        for z in &mut term {
            *z *= inv;
            largest = largest.max(z.norm_sqr());
        }
        for (s, t) in sum.iter_mut().zip(term.iter()) {
            *s += t;
        }
        if largest < 1e-36 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = mat_mul(&sum, &sum, dim);
    }
    sum
}

fn identity_mat(dim: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::ZERO; dim * dim];
    for r in 0..dim {
        m[r * dim + r] = Complex64::ONE;
    }
    m
}

fn mat_mul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; dim * dim];
    for r in 0..dim {
        for j in 0..dim {
            let x = a[r * dim + j];
            if x == Complex64::ZERO {
                continue;
            }
            for c in 0..dim {
                out[r * dim + c] += x * b[j * dim + c];
            }
        }
    }
    out
}

// ======================================================================
// Tests
// ======================================================================
