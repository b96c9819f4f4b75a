//! Post-processing and derived experiments: exponential decay fitting,
//! multi-qubit dephasing scaling, exact single-round failure probes, the
//! probability-vs-amplitude exercise, and corrected-vs-uncorrected
//! comparisons.
//!
//! Fitting operates on recorded traces and never re-enters the simulator.
//! The exact-round probes enumerate measurement branches with their Born
//! weights instead of sampling them, which resolves logical failure rates
//! far below what naive sampling could reach (the only Monte Carlo left is
//! over the random error angles).

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::codes::CodeSpec;
use crate::noise::{apply_idle_noise, AxisMode, NoiseModel};
use crate::protocol::{run_experiment, CodeChoice, RunConfig, RunMode};
use crate::statevec::{StateVector, Unitary};
use crate::{Error, Result};

/// Coherence floor below which trace points are excluded from fitting: the
/// proxy `2F - 1` is dominated by sampling noise once it is this small.
pub const COHERENCE_FLOOR: f64 = 0.1;

/// Minimum number of usable trace points for a fit.
pub const MIN_FIT_POINTS: usize = 5;

/// Branches with Born weight below this are dropped from exact enumeration.
const BRANCH_PROBABILITY_FLOOR: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Exponential decay fitting
// ---------------------------------------------------------------------------

/// Whether a decay fit succeeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// A non-negative decay rate was extracted.
    Exponential,
    /// The coherent window was too short, or the coherence grew instead of
    /// decaying; no rate is reported.
    NoneDetected,
}

/// Result of fitting `F(t) = (1 + exp(-rate * t)) / 2` to a fidelity trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Decay constant per hardware step (non-negative when
    /// `model == Exponential`, zero otherwise).
    pub rate: f64,
    /// Standard error of `rate` from the least-squares fit.
    pub rate_stderr: f64,
    pub model: FitModel,
    /// Half-open range of trace indices that entered the fit.
    pub window: (usize, usize),
}

impl DecayFit {
    fn none_detected(window: (usize, usize)) -> Self {
        DecayFit {
            rate: 0.0,
            rate_stderr: 0.0,
            model: FitModel::NoneDetected,
            window,
        }
    }
}

/// Fits an exponential decay to a per-round mean-fidelity trace.
///
/// The fit is ordinary least squares of `ln(2F - 1)` (the coherence proxy:
/// for an equal-weight superposition under phase noise it isolates the
/// decaying off-diagonal part from the constant classical part) against the
/// round index, over the longest prefix of the trace with coherence above
/// [`COHERENCE_FLOOR`]. The per-round slope is converted to a per-step rate
/// by dividing by `steps_per_round`.
///
/// Returns [`FitModel::NoneDetected`] when fewer than [`MIN_FIT_POINTS`]
/// points are usable or the fitted rate is negative (coherence growing).
pub fn fit_exponential(trace: &[f64], steps_per_round: f64) -> DecayFit {
    let spr = if steps_per_round > 0.0 {
        steps_per_round
    } else {
        1.0
    };
    let mut ys = Vec::with_capacity(trace.len());
    for &f in trace {
        let coherence = 2.0 * f - 1.0;
        if coherence <= COHERENCE_FLOOR {
            break;
        }
        ys.push(coherence.ln());
    }
    let n = ys.len();
    let window = (0, n);
    if n < MIN_FIT_POINTS {
        return DecayFit::none_detected(window);
    }

    let nf = n as f64;
    let x_mean = (nf - 1.0) / 2.0;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let rate = -slope / spr;
    if rate < 0.0 {
        return DecayFit::none_detected(window);
    }

    let mut ss_resid = 0.0;
    for (i, &y) in ys.iter().enumerate() {
        let fit = intercept + slope * i as f64;
        ss_resid += (y - fit) * (y - fit);
    }
    let rate_stderr = if n > 2 {
        (ss_resid / (nf - 2.0) / sxx).sqrt() / spr
    } else {
        0.0
    };

    DecayFit {
        rate,
        rate_stderr,
        model: FitModel::Exponential,
        window,
    }
}

/// Least-squares slope of `ln y` against `ln x`. All inputs must be positive
/// and the two slices equally long with at least two points.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::config(
            "log_log_slope needs two equally long series of at least 2 points",
        ));
    }
    let mut lx = Vec::with_capacity(xs.len());
    let mut ly = Vec::with_capacity(ys.len());
    for (&x, &y) in xs.iter().zip(ys) {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::config("log_log_slope needs positive data"));
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    let n = lx.len() as f64;
    let xm = lx.iter().sum::<f64>() / n;
    let ym = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    if sxx == 0.0 {
        return Err(Error::config(
            "log_log_slope needs at least two distinct x values",
        ));
    }
    Ok(sxy / sxx)
}

// ---------------------------------------------------------------------------
// Multi-qubit dephasing scaling
// ---------------------------------------------------------------------------

/// Decay measurement for one register size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n_qubits: usize,
    pub fit: DecayFit,
    /// Mean fidelity against the ideal state at each step (index 0 = 1.0).
    pub mean_fidelity: Vec<f64>,
}

/// Outcome of the dephasing scaling experiment across register sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub eps_step: f64,
    pub trials: u64,
    pub points: Vec<ScalingPoint>,
    /// Least-squares slope of decay rate against qubit count, over the
    /// points whose fits succeeded (`None` with fewer than two of those).
    pub rate_vs_n_slope: Option<f64>,
}

/// Measures how fast `(|0...0> + |1...1>)/sqrt(2)` loses coherence under
/// per-step z-axis kicks of size `eps_step`, for every register size from 1
/// to `n_max`. Each qubit receives one independent kick per step, so the
/// branch phase difference accumulates variance `n * eps_step^2` per step
/// and the coherence decay rate grows linearly with `n`.
///
/// Trial `(n, i)` runs on RNG stream `(n - 1) * trials + i` of `seed`, so
/// the result is fully deterministic.
pub fn dephasing_scaling_experiment(
    n_max: usize,
    eps_step: f64,
    steps: u32,
    trials: u64,
    seed: u64,
) -> Result<ScalingResult> {
    if n_max < 1 {
        return Err(Error::config("n_max must be at least 1"));
    }
    if n_max > 20 {
        return Err(Error::Capacity {
            requested: n_max,
            max: 20,
        });
    }
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let noise = NoiseModel {
        eps_step,
        axis_mode: AxisMode::ZOnly,
        sigma_gate: 0.0,
        c_rms: 0.0,
        d_gate: 1,
        d_meas: 1,
        gamma1: 0.0,
        gamma2: 0.0,
    };
    noise.validate()?;

    let mut points = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let dim = 1usize << n;
        let mut amps = vec![num_complex::Complex64::ZERO; dim];
        amps[0] = num_complex::Complex64::ONE;
        amps[dim - 1] = num_complex::Complex64::ONE;
        let ideal = StateVector::from_amplitudes(amps)?;
        let qubits: Vec<usize> = (0..n).collect();

        let mut sums = vec![0.0f64; steps as usize + 1];
        for trial in 0..trials {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream((n as u64 - 1) * trials + trial);
            let mut state = ideal.clone();
            sums[0] += 1.0;
            for sum in sums.iter_mut().skip(1) {
                apply_idle_noise(&mut state, &qubits, 1, &noise, &mut rng)?;
                *sum += state.fidelity(&ideal)?;
            }
        }
        let mean_fidelity: Vec<f64> = sums.iter().map(|s| s / trials as f64).collect();
        let fit = fit_exponential(&mean_fidelity, 1.0);
        points.push(ScalingPoint {
            n_qubits: n,
            fit,
            mean_fidelity,
        });
    }

    let fitted: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.fit.model == FitModel::Exponential)
        .map(|p| (p.n_qubits as f64, p.fit.rate))
        .collect();
    let rate_vs_n_slope = if fitted.len() >= 2 {
        let n = fitted.len() as f64;
        let xm = fitted.iter().map(|(x, _)| x).sum::<f64>() / n;
        let ym = fitted.iter().map(|(_, y)| y).sum::<f64>() / n;
        let sxx: f64 = fitted.iter().map(|(x, _)| (x - xm) * (x - xm)).sum();
        let sxy: f64 = fitted.iter().map(|(x, y)| (x - xm) * (y - ym)).sum();
        if sxx > 0.0 {
            Some(sxy / sxx)
        } else {
            None
        }
    } else {
        None
    };

    Ok(ScalingResult {
        eps_step,
        trials,
        points,
        rate_vs_n_slope,
    })
}

// ---------------------------------------------------------------------------
// Probability vs amplitude exercise
// ---------------------------------------------------------------------------

/// Rotation axis for the probability-vs-amplitude exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExerciseAxis {
    X,
    Y,
}

/// The two answers to "what is the chance of reading 0 after rotating
/// `cos(theta)|0> + sin(theta)|1>`?" and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeExercise {
    pub theta: f64,
    pub beta: f64,
    pub axis: ExerciseAxis,
    /// Treats the state as a classical mixture: with probability
    /// `sin^2(theta)` the qubit "is" |1>, otherwise |0>, and each case is
    /// rotated separately.
    pub p_mixture: f64,
    /// Rotates the amplitudes coherently, as quantum mechanics requires.
    pub p_amplitude: f64,
    /// `p_amplitude - p_mixture`: the interference cross term the mixture
    /// picture cannot produce.
    pub difference: f64,
}

/// Computes both answers numerically from the 2x2 rotation matrix (the
/// closed forms live in the tests that check this function).
pub fn probability_vs_amplitude_exercise(
    theta: f64,
    axis: ExerciseAxis,
    beta: f64,
) -> Result<AmplitudeExercise> {
    let rotation = match axis {
        ExerciseAxis::X => Unitary::rx(beta),
        ExerciseAxis::Y => Unitary::ry(beta),
    };
    let p1 = theta.sin() * theta.sin();
    let p_mixture =
        (1.0 - p1) * rotation.entry(0, 0).norm_sqr() + p1 * rotation.entry(0, 1).norm_sqr();

    let amps = vec![
        num_complex::Complex64::new(theta.cos(), 0.0),
        num_complex::Complex64::new(theta.sin(), 0.0),
    ];
    let mut state = StateVector::from_amplitudes(amps)?;
    state.apply_unitary(&[0], &rotation)?;
    let p_amplitude = state.bit_probability(0, 0)?;

    Ok(AmplitudeExercise {
        theta,
        beta,
        axis,
        p_mixture,
        p_amplitude,
        difference: p_amplitude - p_mixture,
    })
}

// ---------------------------------------------------------------------------
// Exact single-round failure probes
// ---------------------------------------------------------------------------

/// Runs one *ideal* error-correction round on `state` and returns the
/// Born-weighted expected fidelity against `reference` over all syndrome
/// outcomes: sum over syndromes of P(syndrome) * F(recovered branch).
///
/// Every generator is read through a fresh ancilla with exact gates; both
/// measurement branches are followed by postselection instead of sampling,
/// so the result is exact for the given input state (branches below weight
/// 1e-14 are dropped). Unrecognized syndromes receive no recovery, matching
/// the protocol's behavior.
pub fn expected_fidelity_after_exact_round(
    state: &StateVector,
    code: &CodeSpec,
    reference: &StateVector,
) -> Result<f64> {
    fn recurse(
        state: StateVector,
        prob: f64,
        gen_idx: usize,
        bits: &mut Vec<u8>,
        code: &CodeSpec,
        reference: &StateVector,
        acc: &mut f64,
    ) -> Result<()> {
        if gen_idx == code.generators.len() {
            let syndrome = code.syndrome_from_generator_bits(bits)?;
            let mut recovered = state;
            if let Some(ops) = code.recovery_ops(&syndrome)? {
                for op in &ops {
                    op.apply_exact(&mut recovered)?;
                }
            }
            *acc += prob * recovered.fidelity(reference)?;
            return Ok(());
        }
        let mut read = state;
        let ancilla = read.n_qubits();
        read.append_qubits("0")?;
        for op in CodeSpec::bare_generator_circuit(&code.generators[gen_idx], ancilla) {
            op.apply_exact(&mut read)?;
        }
        for bit in [0u8, 1u8] {
            let p_bit = read.bit_probability(ancilla, bit)?;
            if prob * p_bit < BRANCH_PROBABILITY_FLOOR {
                continue;
            }
            let mut branch = read.clone();
            branch.postselect_and_remove(ancilla, bit)?;
            bits.push(bit);
            recurse(
                branch,
                prob * p_bit,
                gen_idx + 1,
                bits,
                code,
                reference,
                acc,
            )?;
            bits.pop();
        }
        Ok(())
    }

    if state.n_qubits() != code.n_data {
        return Err(Error::DimensionMismatch {
            left: state.n_qubits(),
            right: code.n_data,
        });
    }
    let mut acc = 0.0;
    let mut bits = Vec::with_capacity(code.generators.len());
    recurse(state.clone(), 1.0, 0, &mut bits, code, reference, &mut acc)?;
    Ok(acc)
}

/// Mean logical infidelity after one ideal correction round, when each data
/// qubit of the encoded |0> state first receives an independent x rotation
/// with angle ~ N(0, eps^2). The error channel is sampled; the round itself
/// is enumerated exactly, so infidelities of order eps^4 are resolved
/// without 1/eps^4 sample counts.
pub fn code_failure_infidelity(code: &CodeSpec, eps: f64, trials: u64, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let input = StateVector::new_basis_state(1, "0")?;
    let reference = crate::codes::ideal_encode(code, &input)?;
    let normal =
        Normal::new(0.0, eps).map_err(|e| Error::config(format!("bad error scale: {e}")))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let mut state = reference.clone();
        for q in 0..code.n_data {
            let angle = normal.sample(&mut rng);
            state.apply_unitary(&[q], &Unitary::rx(angle))?;
        }
        total += expected_fidelity_after_exact_round(&state, code, &reference)?;
    }
    Ok(1.0 - total / trials as f64)
}

/// Mean infidelity of a bare physical |0> qubit after one x rotation with
/// angle ~ N(0, eps^2): the uncorrected counterpart of
/// [`code_failure_infidelity`], expected to scale as eps^2 / 4.
pub fn unencoded_failure_infidelity(eps: f64, trials: u64, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::config("trials must be at least 1"));
    }
    let reference = StateVector::new_basis_state(1, "0")?;
    let normal =
        Normal::new(0.0, eps).map_err(|e| Error::config(format!("bad error scale: {e}")))?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..trials {
        let mut state = reference.clone();
        let angle = normal.sample(&mut rng);
        state.apply_unitary(&[0], &Unitary::rx(angle))?;
        total += state.fidelity(&reference)?;
    }
    Ok(1.0 - total / trials as f64)
}

/// Infidelity after one ideal correction round when the encoded |0> state
/// suffers a *correlated* two-qubit error: a joint XX rotation putting
/// relative amplitude `sin(eps)` on the double-flip branch. Deterministic
/// (no sampling): the syndrome of a double flip points at the wrong qubit,
/// so the recovery completes a logical flip and the infidelity stays at
/// second order in eps no matter the code distance.
pub fn correlated_error_infidelity(code: &CodeSpec, eps: f64) -> Result<f64> {
    if code.n_data < 2 {
        return Err(Error::config(
            "correlated error needs at least 2 data qubits",
        ));
    }
    let input = StateVector::new_basis_state(1, "0")?;
    let reference = crate::codes::ideal_encode(code, &input)?;
    let mut state = reference.clone();
    state.apply_unitary(&[0, 1], &Unitary::xx_rotation(eps))?;
    let fidelity = expected_fidelity_after_exact_round(&state, code, &reference)?;
    Ok(1.0 - fidelity)
}

// ---------------------------------------------------------------------------
// Corrected vs uncorrected comparison
// ---------------------------------------------------------------------------

/// One grid point of the corrected-vs-uncorrected comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub eps_step: f64,
    pub corrected: DecayFit,
    pub uncorrected: DecayFit,
    /// `uncorrected.rate / corrected.rate` in per-step units; `None` when
    /// either fit failed or the corrected rate is zero. Values above 1 mean
    /// correction helped; below 1 mean it hurt. The sign is measured, never
    /// assumed.
    pub gain: Option<f64>,
}

/// A comparison row together with the two full runs behind it, for callers
/// that archive per-arm traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonPoint {
    pub row: ComparisonRow,
    pub corrected_run: crate::protocol::RunResult,
    pub uncorrected_run: crate::protocol::RunResult,
}

/// For each `eps_step` in the grid, runs the full memory experiment twice —
/// once as configured in `base` (which must name a code) and once with the
/// code stripped off — fits both fidelity traces, and reports the per-step
/// decay rates and their ratio. All other noise scales stay at their `base`
/// values.
///
///// The two arms are compared over the same *hardware-step* horizon: an
/// uncorrected round is just the idle period, so the uncorrected arm gets
/// proportionally more rounds to cover the wall-clock time the corrected
/// arm spends on syndrome circuits. Both rates are per step, making the
/// ratio a like-for-like storage-quality comparison.
pub fn compare_corrected_uncorrected(
    base: &RunConfig,
    eps_grid: &[f64],
) -> Result<Vec<ComparisonRow>> {
    if eps_grid.is_empty() {
        return Err(Error::config("eps_grid must not be empty"));
    }
    eps_grid
        .iter()
        .map(|&eps| compare_point(base, eps).map(|p| p.row))
        .collect()
}

/// One grid point of [`compare_corrected_uncorrected`], returning the full
/// runs alongside the fitted row.
pub fn compare_point(base: &RunConfig, eps: f64) -> Result<ComparisonPoint> {
    if base.code == CodeChoice::None {
        return Err(Error::config(
            "base config must name a code; the uncorrected arm is derived from it",
        ));
    }
    if base.idle_steps_per_round == 0 {
        return Err(Error::config(
            "comparison needs idle_steps_per_round >= 1 so the uncorrected arm advances in time",
        ));
    }
    let mut corrected_cfg = base.clone();
    corrected_cfg.noise.eps_step = eps;
    let corrected_run = run_experiment(&corrected_cfg)?;
    let corrected = fit_exponential(
        &corrected_run.mean_fidelity,
        corrected_run.mean_steps_per_round.unwrap_or(1.0),
    );

    let mut uncorrected_cfg = corrected_cfg.clone();
    uncorrected_cfg.code = CodeChoice::None;
    uncorrected_cfg.mode = RunMode::Uncorrected;
    let steps_per_round = corrected_run
        .mean_steps_per_round
        .unwrap_or(base.idle_steps_per_round.max(1) as f64);
    let target_steps = steps_per_round * corrected_cfg.max_rounds as f64;
    uncorrected_cfg.max_rounds = ((target_steps / base.idle_steps_per_round.max(1) as f64).ceil()
        as u64)
        .clamp(base.max_rounds as u64, 200_000) as u32;
    let uncorrected_run = run_experiment(&uncorrected_cfg)?;
    let uncorrected = fit_exponential(
        &uncorrected_run.mean_fidelity,
        uncorrected_run.mean_steps_per_round.unwrap_or(1.0),
    );

    let gain = match (corrected.model, uncorrected.model) {
        (FitModel::Exponential, FitModel::Exponential) if corrected.rate > 0.0 => {
            Some(uncorrected.rate / corrected.rate)
        }
        _ => None,
    };
    Ok(ComparisonPoint {
        row: ComparisonRow {
            eps_step: eps,
            corrected,
            uncorrected,
            gain,
        },
        corrected_run,
        uncorrected_run,
    })
}

// ---------------------------------------------------------------------------
