//! Error-mitigation estimators and end-to-end pipelines.
//!
//! Every method here turns raw sampled expectation values into an estimate
//! of the noiseless value:
//!
//! * **RIDA** (random-inverse depolarization estimation): a fraction of the
//!   target's gates plus their inverse form a circuit whose ideal
//!   expectation is exactly one, so its measured value reads off the
//!   depolarization probability of the target's error channel. Dividing the
//!   target's raw value by `1 - p_hat` undoes both gate depolarization and
//!   (because estimation and target circuits share measurements) readout
//!   error.
//! * **TREX + exponential ZNE**: readout-twirled expectation values divided
//!   by a measurement-only calibration remove readout error; gate error is
//!   extrapolated away from unitary-folded circuits at scale factors 1, 3,
//!   and 5.
//! * **CNOT-only depolarization + quadratic ZNE**: estimation circuits made
//!   of just the entangling gates calibrate a per-fold depolarization
//!   probability; the inverted fold values are extrapolated quadratically
//!   to zero noise.
//!
//! Pipelines draw every random choice from seeds derived with
//! [`crate::rng::derive_seed`], so results are fully reproducible.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{decompose_one_qubit, ry_matrix, Circuit, Gate};
use crate::error::{Error, Result};
use crate::mat::mat2_mul;
use crate::noise::NoiseModel;
use crate::rng::{derive_rng, derive_seed};
use crate::simulator::{sample, ShotData, Statevector};
use crate::twirl::twirl_ensemble_estimate;

/// Estimation-circuit count used at full experimental scale.
pub const DEFAULT_EST_CIRCUITS: usize = 50;
/// Estimation shot budget used at full experimental scale.
pub const DEFAULT_EST_SHOTS: u64 = 10_000_000;
/// Fold factors used by both ZNE variants.
pub const FOLD_FACTORS: [usize; 3] = [1, 3, 5];

/// The mitigation strategies the lab can run. The serialized labels are the
/// ones written to result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Plain sampled expectation, no mitigation.
    Raw,
    /// Random-inverse depolarization estimation.
    Rida,
    /// Readout-error calibration with exponential zero-noise extrapolation.
    TrexEzne,
    /// Entangler-only depolarization with quadratic zero-noise extrapolation.
    CnotQzne,
    /// `CnotQzne` with random rotation layers around the entangler block.
    CnotQzneRot,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Raw => "raw",
            Method::Rida => "rida",
            Method::TrexEzne => "trex_ezne",
            Method::CnotQzne => "cnot_qzne",
            Method::CnotQzneRot => "cnot_qzne_rot",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.replace('-', "_").as_str() {
            "raw" => Ok(Method::Raw),
            "rida" => Ok(Method::Rida),
            "trex_ezne" => Ok(Method::TrexEzne),
            "cnot_qzne" => Ok(Method::CnotQzne),
            "cnot_qzne_rot" => Ok(Method::CnotQzneRot),
            other => Err(Error::InvalidArgument(format!(
                "unknown method '{other}'; expected raw, rida, trex-ezne, cnot-qzne or cnot-qzne-rot"
            ))),
        }
    }
}

/// A depolarization probability estimated from one or more estimation
/// circuits, with the per-circuit sample means that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepolarizationEstimate {
    /// `1 -` (shot-weighted mean of the per-circuit means). May be negative
    /// when sampling noise pushes a mean above one; it is deliberately not
    /// clamped.
    pub p_hat: f64,
    /// `(sample mean, shots)` per estimation circuit, in input order.
    pub per_circuit: Vec<(f64, u64)>,
    pub total_shots: u64,
}

/// A mitigated expectation value together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigatedValue {
    pub method: Method,
    /// The mitigated estimate. Never clipped to `[-1, 1]`.
    pub value: f64,
    /// The unmitigated sample mean of the target circuit (at fold factor 1
    /// for the extrapolating methods).
    pub raw: f64,
    /// Shots spent on the target circuit itself; calibration and estimation
    /// budgets are accounted separately by the caller.
    pub shots_used: u64,
    /// Closed-form variance prediction where one exists (`raw`, `rida`).
    pub predicted_variance: Option<f64>,
    /// True when a singular per-point inversion forced a fallback to the
    /// uninverted value (quadratic ZNE points only).
    pub fallback: bool,
}

/// The three expectation values entering a zero-noise extrapolation, at
/// fold factors 1, 3 and 5, with the shots spent on each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZnePoints {
    pub x1: f64,
    pub x3: f64,
    pub x5: f64,
    pub shots: [u64; 3],
}

/// Sampling options shared by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Number of Pauli-twirled instances per circuit; `0` disables gate
    /// twirling entirely.
    pub twirls: usize,
    /// Whether sampling applies the classical readout twirl.
    pub twirl_readout: bool,
}

impl Default for PipelineOptions {
    fn default() -> PipelineOptions {
        PipelineOptions {
            twirls: 0,
            twirl_readout: true,
        }
    }
}

/// Splits `total` shots into `parts` integers that are as even as possible,
/// the remainder going to the first parts: `split_shots(10, 3) = [4, 3, 3]`.
pub fn split_shots(total: u64, parts: usize) -> Result<Vec<u64>> {
    if parts == 0 {
        return Err(Error::InvalidArgument("cannot split shots into zero parts".into()));
    }
    if total < parts as u64 {
        return Err(Error::InvalidArgument(format!(
            "{total} shots cannot cover {parts} circuits"
        )));
    }
    let base = total / parts as u64;
    let rem = total % parts as u64;
    Ok((0..parts as u64).map(|i| base + u64::from(i < rem)).collect())
}

/// Builds one random-inverse estimation circuit for `target`.
///
/// Half of the one-qubit pool and half of the two-qubit pool (rounded up,
/// chosen uniformly without replacement) are replayed in their original
/// order, followed by their exact inverse, followed by the companion gates
/// verbatim. Parameterized gates get fresh angles drawn uniformly from
/// `[0, 2*pi)`, since the depolarization probability does not depend on
/// rotation parameters. The result keeps the target's measured set but has
/// no basis change: its ideal expectation is the `Z`-product, exactly one.
pub fn rida_generate(target: &Circuit, rng: &mut impl Rng) -> Result<Circuit> {
    let classes = target.classify_gates();
    if classes.pool_size() == 0 {
        return Err(Error::DegenerateCircuit(
            "no gates eligible for estimation-circuit selection".into(),
        ));
    }
    let g1 = classes.pool_1q.len().div_ceil(2);
    let g2 = classes.pool_2q.len().div_ceil(2);
    let mut chosen: Vec<usize> = Vec::with_capacity(g1 + g2);
    for (pool, count) in [(&classes.pool_1q, g1), (&classes.pool_2q, g2)] {
        chosen.extend(
            rand::seq::index::sample(rng, pool.len(), count)
                .iter()
                .map(|k| pool[k]),
        );
    }
    chosen.sort_unstable();

    let mut forward: Vec<Gate> = Vec::with_capacity(chosen.len());
    for &i in &chosen {
        let mut gate = target.gates[i].clone();
        if gate.kind.parameterized() {
            gate.angle = Some(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        forward.push(gate);
    }
    let mut gates = forward.clone();
    gates.extend(forward.iter().rev().map(Gate::inverse));
    gates.extend(classes.companion.iter().map(|&i| target.gates[i].clone()));

    Circuit::new(target.n_qubits, gates, target.measured.iter().copied())
}

/// Pools per-circuit sample means into a depolarization estimate:
/// `p_hat = 1 -` the shot-weighted mean. Pure arithmetic; no clamping.
pub fn estimate_p(results: &[(f64, u64)]) -> Result<DepolarizationEstimate> {
    if results.is_empty() {
        return Err(Error::InvalidArgument(
            "depolarization estimate needs at least one circuit result".into(),
        ));
    }
    let mut weighted = 0.0;
    let mut total: u64 = 0;
    for &(mean, shots) in results {
        if shots == 0 {
            return Err(Error::InvalidArgument(
                "estimation circuit with zero shots".into(),
            ));
        }
        weighted += mean * shots as f64;
        total += shots;
    }
    Ok(DepolarizationEstimate {
        p_hat: 1.0 - weighted / total as f64,
        per_circuit: results.to_vec(),
        total_shots: total,
    })
}

/// Inverts the depolarizing channel on a raw expectation value:
/// `raw / (1 - p_hat)`. Estimates at or beyond total depolarization
/// (`p_hat >= 1 - 1e-9`) are singular; negative `p_hat` is accepted and the
/// result is never clipped.
pub fn depolarizing_invert(raw: f64, p_hat: f64) -> Result<f64> {
    if !p_hat.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "depolarization probability must be finite, got {p_hat}"
        )));
    }
    if p_hat >= 1.0 - 1e-9 {
        return Err(Error::Singularity(format!(
            "depolarization estimate {p_hat} is too close to total depolarization to invert"
        )));
    }
    Ok(raw / (1.0 - p_hat))
}

/// Quadratic zero-noise extrapolation through fold factors 1, 3 and 5:
/// the unique quadratic through the three points, evaluated at zero, which
/// works out to `(15 x1 - 10 x3 + 3 x5) / 8`.
pub fn quadratic_zne(points: &ZnePoints) -> f64 {
    (15.0 * points.x1 - 10.0 * points.x3 + 3.0 * points.x5) / 8.0
}

/// Exponential zero-noise extrapolation through fold factors 1, 3 and 5.
///
/// For a signal decaying as `x(lambda) = x0 * d^lambda` the ratio
/// `u = (x3 - x5) / (x1 - x3)` equals `d^2`, and
/// `x0 = x1 + (x1 - x3) / (u + sqrt(u))` recovers the zero-noise value
/// exactly. Sampled points need not be monotone, so the remaining shapes
/// fall back to stable guesses, making this a total function:
///
/// * all three equal: `x1`;
/// * `x1 == x5`: no usable decay direction, `x1`;
/// * strictly monotone (differences share a sign): the formula above;
/// * `x1` within the span of `x3` and `x5`: the average `(x1 + x3) / 2`;
/// * otherwise (`x5` within the span of `x1` and `x3`): the linear
///   extrapolation `(3 x1 - x3) / 2`.
pub fn exponential_zne(points: &ZnePoints) -> f64 {
    let (x1, x3, x5) = (points.x1, points.x3, points.x5);
    if x1 == x3 && x3 == x5 {
        return x1;
    }
    if x1 == x5 {
        return x1;
    }
    let d1 = x1 - x3;
    let d2 = x3 - x5;
    if d1 * d2 > 0.0 {
        let u = d2 / d1;
        return x1 + d1 / (u + u.sqrt());
    }
    if (x3.min(x5)..=x3.max(x5)).contains(&x1) {
        return (x1 + x3) / 2.0;
    }
    (3.0 * x1 - x3) / 2.0
}

/// The readout-calibrated expectation `f(target) / f(calibration)`, both
/// being readout-twirled signed means. The calibration data must come from
/// a measurement-only circuit on the same measured qubits; a calibration
/// mean of exactly zero is singular.
pub fn trex_ratio(target: &ShotData, calibration: &ShotData) -> Result<f64> {
    if !target.twirled || !calibration.twirled {
        return Err(Error::InvalidArgument(
            "readout-error calibration requires readout-twirled samples".into(),
        ));
    }
    trex_divide(
        target.signed_mean_product()?,
        calibration.signed_mean_product()?,
    )
}

/// The division step of the readout calibration, shared by the data-level
/// and ensemble-level paths.
pub fn trex_divide(target_mean: f64, calibration_mean: f64) -> Result<f64> {
    if calibration_mean == 0.0 {
        return Err(Error::Singularity(
            "readout calibration mean is zero".into(),
        ));
    }
    Ok(target_mean / calibration_mean)
}

/// The measurement-only circuit used to calibrate readout error for a
/// target: same register, same measured set, no gates.
pub fn trex_calibration_circuit(target: &Circuit) -> Result<Circuit> {
    Circuit::new(target.n_qubits, Vec::new(), target.measured.iter().copied())
}

/// Builds the entangler-only estimation circuit for `target`: exactly its
/// two-qubit gates, in order, on the same register and measured set.
///
/// With `with_rotations`, a layer of uniformly random one-qubit rotations
/// (emitted through the basis-gate decomposition) is prepended and its
/// exact inverse appended. Without rotations the diagonal entangler block
/// returns `|0..0>` to itself, so the ideal expectation is one by
/// construction; with rotations that guarantee is lost — see
/// [`ideal_returns_to_zero`].
pub fn cnot_only_estimation(
    target: &Circuit,
    with_rotations: bool,
    rng: &mut impl Rng,
) -> Result<Circuit> {
    let skeleton: Vec<Gate> = target
        .gates
        .iter()
        .filter(|g| !g.injected && g.is_two_qubit())
        .cloned()
        .collect();
    if skeleton.is_empty() {
        return Err(Error::DegenerateCircuit(
            "target has no two-qubit gates to estimate from".into(),
        ));
    }
    let mut gates = Vec::new();
    if with_rotations {
        let mut layer = Vec::new();
        for q in 0..target.n_qubits {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let lambda = rng.gen_range(0.0..std::f64::consts::TAU);
            let rz = |a: f64| Gate::rz(0, a).matrix1().expect("RZ is one-qubit");
            let u = mat2_mul(&rz(phi), &mat2_mul(&ry_matrix(theta), &rz(lambda)));
            layer.extend(decompose_one_qubit(&u, q)?);
        }
        gates.extend(layer.iter().cloned());
        gates.extend(skeleton.iter().cloned());
        gates.extend(layer.iter().rev().map(Gate::inverse));
    } else {
        gates = skeleton;
    }
    Circuit::new(target.n_qubits, gates, target.measured.iter().copied())
}

/// Whether the noiseless circuit maps `|0..0>` back to itself (up to global
/// phase), i.e. whether an estimation circuit's ideal expectation is one.
/// Entangler-only circuits with random rotation layers generally fail this.
pub fn ideal_returns_to_zero(circuit: &Circuit) -> Result<bool> {
    let mut state = Statevector::zero(circuit.n_qubits)?;
    for gate in circuit.gates.iter().filter(|g| !g.injected) {
        state.apply_gate(gate);
    }
    Ok(state.amps[0].norm_sqr() > 1.0 - 1e-9)
}

/// Samples the expectation of `circuit` under `model`, optionally through a
/// Pauli-twirled ensemble (`opts.twirls > 0`). The readout twirl follows
/// `opts.twirl_readout` unless `force_readout_twirl` is set (the readout
/// calibration path needs twirled data regardless of options).
///
/// When the model carries a coherent over-rotation angle, it is injected
/// here — after any folding or estimation-circuit generation — so that the
/// error hits every entangling gate of the circuit actually run, and a
/// twirl then wraps gate and injection together.
pub fn sampled_expectation(
    circuit: &Circuit,
    model: &NoiseModel,
    shots: u64,
    opts: &PipelineOptions,
    force_readout_twirl: bool,
    seed: u64,
) -> Result<f64> {
    let injected;
    let circuit = if model.coherent_angle_rad != 0.0 {
        injected = crate::noise::inject_coherent(circuit, model.coherent_angle_rad);
        &injected
    } else {
        circuit
    };
    let twirl_readout = opts.twirl_readout || force_readout_twirl;
    if opts.twirls == 0 {
        sample(circuit, model, shots, twirl_readout, seed)?.signed_mean_product()
    } else {
        twirl_ensemble_estimate(circuit, model, opts.twirls, shots, twirl_readout, seed)
    }
}

/// Generates `n_circuits` estimation circuits for `target`, samples each
/// with its share of `est_shots_total`, and pools the means into a
/// depolarization estimate. The estimate depends only on the target's gate
/// structure and measured set, so it can be reused across structurally
/// identical targets.
pub fn rida_estimate_p(
    target: &Circuit,
    model: &NoiseModel,
    n_circuits: usize,
    est_shots_total: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<DepolarizationEstimate> {
    let splits = split_shots(est_shots_total, n_circuits)?;
    let results: Vec<(f64, u64)> = splits
        .par_iter()
        .enumerate()
        .map(|(i, &shots)| -> Result<(f64, u64)> {
            let mut rng = derive_rng(seed, "rida-generate", &[i as u64]);
            let est = rida_generate(target, &mut rng)?;
            let mean = sampled_expectation(
                &est,
                model,
                shots,
                opts,
                false,
                derive_seed(seed, "rida-est-shots", &[i as u64]),
            )?;
            Ok((mean, shots))
        })
        .collect::<Result<Vec<_>>>()?;
    estimate_p(&results)
}

/// Applies a ready depolarization estimate to a freshly sampled target
/// value. Exposed separately so a cached estimate can serve many targets.
pub fn rida_apply(
    target: &Circuit,
    model: &NoiseModel,
    estimate: &DepolarizationEstimate,
    target_shots: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let raw = sampled_expectation(
        target,
        model,
        target_shots,
        opts,
        false,
        derive_seed(seed, "rida-target-shots", &[]),
    )?;
    let value = depolarizing_invert(raw, estimate.p_hat)?;
    let denom = (1.0 - estimate.p_hat) * (1.0 - estimate.p_hat);
    Ok(MitigatedValue {
        method: Method::Rida,
        value,
        raw,
        shots_used: target_shots,
        predicted_variance: Some((1.0 - raw * raw) / (target_shots as f64 * denom)),
        fallback: false,
    })
}

/// End-to-end random-inverse depolarization estimation: estimate `p` from
/// `n_est_circuits` randomized circuits, sample the target, invert.
/// Singular estimates propagate as errors so the caller can decide how to
/// fall back.
pub fn rida_pipeline(
    target: &Circuit,
    model: &NoiseModel,
    n_est_circuits: usize,
    est_shots_total: u64,
    target_shots: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let estimate = rida_estimate_p(target, model, n_est_circuits, est_shots_total, opts, seed)?;
    rida_apply(target, model, &estimate, target_shots, opts, seed)
}

/// Plain sampling with no mitigation, packaged like the mitigated methods
/// for uniform reporting.
pub fn raw_pipeline(
    target: &Circuit,
    model: &NoiseModel,
    shots: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let raw = sampled_expectation(
        target,
        model,
        shots,
        opts,
        false,
        derive_seed(seed, "raw-target-shots", &[]),
    )?;
    Ok(MitigatedValue {
        method: Method::Raw,
        value: raw,
        raw,
        shots_used: shots,
        predicted_variance: Some((1.0 - raw * raw) / shots as f64),
        fallback: false,
    })
}

/// Readout-calibrated exponential extrapolation with a cached calibration:
/// the target budget is split over fold factors 1, 3 and 5; each folded
/// value is divided by the calibration mean and the three ratios are
/// extrapolated exponentially to zero.
pub fn ezne_trex_apply(
    target: &Circuit,
    model: &NoiseModel,
    calibration_mean: f64,
    target_shots_total: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let splits = split_shots(target_shots_total, FOLD_FACTORS.len())?;
    let mut means = [0.0f64; 3];
    for (k, &factor) in FOLD_FACTORS.iter().enumerate() {
        let folded = target.fold(factor)?;
        means[k] = sampled_expectation(
            &folded,
            model,
            splits[k],
            opts,
            true,
            derive_seed(seed, "trex-target-shots", &[factor as u64]),
        )?;
    }
    let points = ZnePoints {
        x1: trex_divide(means[0], calibration_mean)?,
        x3: trex_divide(means[1], calibration_mean)?,
        x5: trex_divide(means[2], calibration_mean)?,
        shots: [splits[0], splits[1], splits[2]],
    };
    Ok(MitigatedValue {
        method: Method::TrexEzne,
        value: exponential_zne(&points),
        raw: means[0],
        shots_used: target_shots_total,
        predicted_variance: None,
        fallback: false,
    })
}

/// End-to-end readout calibration plus exponential extrapolation; the
/// calibration circuit (measurements only) gets its own shot budget.
pub fn ezne_trex_pipeline(
    target: &Circuit,
    model: &NoiseModel,
    target_shots_total: u64,
    calibration_shots: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let calibration = trex_calibration_circuit(target)?;
    let data = sample(
        &calibration,
        model,
        calibration_shots,
        true,
        derive_seed(seed, "trex-calibration", &[]),
    )?;
    ezne_trex_apply(
        target,
        model,
        data.signed_mean_product()?,
        target_shots_total,
        opts,
        seed,
    )
}

/// Estimates one depolarization probability per fold factor from
/// entangler-only circuits of the folded target. Like the random-inverse
/// estimate this depends only on circuit structure, so it is reusable
/// across a class of targets (with rotations, the random layer is drawn
/// from the seed per fold factor).
pub fn cnot_estimate_p(
    target: &Circuit,
    model: &NoiseModel,
    est_shots_total: u64,
    with_rotations: bool,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<Vec<DepolarizationEstimate>> {
    let splits = split_shots(est_shots_total, FOLD_FACTORS.len())?;
    FOLD_FACTORS
        .par_iter()
        .enumerate()
        .map(|(k, &factor)| -> Result<DepolarizationEstimate> {
            let folded = target.fold(factor)?;
            let mut rng = derive_rng(seed, "cnot-est-generate", &[factor as u64]);
            let est = cnot_only_estimation(&folded, with_rotations, &mut rng)?;
            let mean = sampled_expectation(
                &est,
                model,
                splits[k],
                opts,
                false,
                derive_seed(seed, "cnot-est-shots", &[factor as u64]),
            )?;
            estimate_p(&[(mean, splits[k])])
        })
        .collect()
}

/// Applies cached per-fold depolarization estimates: each folded target
/// value is inverted with its own `p_hat`, then the three are extrapolated
/// quadratically. A singular inversion falls back to the uninverted value
/// for that point and sets the `fallback` flag instead of failing.
pub fn cnot_qzne_apply(
    target: &Circuit,
    model: &NoiseModel,
    estimates: &[DepolarizationEstimate],
    with_rotations: bool,
    target_shots_total: u64,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    if estimates.len() != FOLD_FACTORS.len() {
        return Err(Error::InvalidArgument(format!(
            "expected one depolarization estimate per fold factor, got {}",
            estimates.len()
        )));
    }
    let splits = split_shots(target_shots_total, FOLD_FACTORS.len())?;
    let mut raw1 = 0.0;
    let mut inverted = [0.0f64; 3];
    let mut fallback = false;
    for (k, &factor) in FOLD_FACTORS.iter().enumerate() {
        let folded = target.fold(factor)?;
        let mean = sampled_expectation(
            &folded,
            model,
            splits[k],
            opts,
            false,
            derive_seed(seed, "cnot-target-shots", &[factor as u64]),
        )?;
        if factor == 1 {
            raw1 = mean;
        }
        inverted[k] = match depolarizing_invert(mean, estimates[k].p_hat) {
            Ok(v) => v,
            Err(Error::Singularity(_)) => {
                fallback = true;
                mean
            }
            Err(e) => return Err(e),
        };
    }
    let points = ZnePoints {
        x1: inverted[0],
        x3: inverted[1],
        x5: inverted[2],
        shots: [splits[0], splits[1], splits[2]],
    };
    Ok(MitigatedValue {
        method: if with_rotations {
            Method::CnotQzneRot
        } else {
            Method::CnotQzne
        },
        value: quadratic_zne(&points),
        raw: raw1,
        shots_used: target_shots_total,
        predicted_variance: None,
        fallback,
    })
}

/// End-to-end entangler-only depolarization with quadratic extrapolation:
/// per fold factor, estimate `p` from an entangler-only circuit, invert the
/// folded target's value, then extrapolate the three inverted values.
pub fn cnot_qzne_pipeline(
    target: &Circuit,
    model: &NoiseModel,
    target_shots_total: u64,
    est_shots_total: u64,
    with_rotations: bool,
    opts: &PipelineOptions,
    seed: u64,
) -> Result<MitigatedValue> {
    let estimates = cnot_estimate_p(target, model, est_shots_total, with_rotations, opts, seed)?;
    cnot_qzne_apply(
        target,
        model,
        &estimates,
        with_rotations,
        target_shots_total,
        opts,
        seed,
    )
}
