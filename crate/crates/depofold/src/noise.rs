//! Hardware-style noise model: gate depolarizing errors, thermal relaxation
//! on idle qubits, readout flips, and optional coherent over-rotation after
//! entangling gates.
//!
//! Default parameters are medians of a 156-qubit heavy-hex superconducting
//! device. The whole model scales with a single `multiplier` knob: error
//! probabilities scale up (clamped at one), coherence times scale down, gate
//! durations stay fixed.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{Error, Result};
use crate::mat::{c, ci, Mat2, ZERO};

/// Noise parameters, all in "per gate" probabilities and microseconds.
///
/// The stored fields are the unscaled device values; the `effective_*`
/// accessors fold in `multiplier`, which is what the simulator consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Depolarizing probability attached to each one-qubit gate.
    pub p_1q: f64,
    /// Depolarizing probability attached to each two-qubit gate.
    pub p_2q: f64,
    /// Probability of flipping each measured bit at readout.
    pub p_readout: f64,
    /// Amplitude-damping time constant.
    pub t1_us: f64,
    /// Transverse relaxation time constant (`t2 <= 2 * t1`).
    pub t2_us: f64,
    /// Duration of one-qubit gates.
    pub dur_1q_us: f64,
    /// Duration of two-qubit gates.
    pub dur_2q_us: f64,
    /// Overall noise strength; `0` simulates a noiseless device.
    pub multiplier: f64,
    /// Coherent `RX` over-rotation angle injected after every two-qubit
    /// gate; `0` disables injection.
    pub coherent_angle_rad: f64,
    /// Treat `RZ` as a virtual frame change with no error and no duration.
    pub rz_is_virtual: bool,
    /// Attach one joint two-qubit depolarizing channel to entangling gates
    /// instead of independent local channels on each wire.
    pub joint_2q_depol: bool,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::kingston()
    }
}

impl NoiseModel {
    /// Median calibration snapshot of the reference 156-qubit device.
    pub fn kingston() -> NoiseModel {
        NoiseModel {
            p_1q: 2.25e-4,
            p_2q: 2.07e-3,
            p_readout: 7.32e-3,
            t1_us: 270.0,
            t2_us: 143.0,
            dur_1q_us: 6.8e-3,
            dur_2q_us: 6.8e-2,
            multiplier: 1.0,
            coherent_angle_rad: 0.0,
            rz_is_virtual: false,
            joint_2q_depol: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_1q", self.p_1q),
            ("p_2q", self.p_2q),
            ("p_readout", self.p_readout),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.t1_us <= 0.0 || self.t1_us.is_nan() || self.t2_us <= 0.0 || self.t2_us.is_nan() {
            return Err(Error::InvalidArgument(
                "coherence times must be positive".into(),
            ));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(Error::InvalidArgument(format!(
                "t2 = {} exceeds the physical bound 2 * t1 = {}",
                self.t2_us,
                2.0 * self.t1_us
            )));
        }
        if self.dur_1q_us < 0.0 || self.dur_2q_us < 0.0 {
            return Err(Error::InvalidArgument("durations must be non-negative".into()));
        }
        if !self.multiplier.is_finite() || self.multiplier < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise multiplier must be finite and non-negative, got {}",
                self.multiplier
            )));
        }
        if !self.coherent_angle_rad.is_finite() {
            return Err(Error::InvalidArgument("coherent angle must be finite".into()));
        }
        Ok(())
    }

    /// A copy with the noise strength scaled by `k` on top of the current
    /// multiplier. Probabilities grow (clamping at one, see
    /// [`NoiseModel::clamped`]), coherence times shrink, durations and the
    /// coherent angle stay fixed.
    pub fn scale(&self, k: f64) -> Result<NoiseModel> {
        if !k.is_finite() || k < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be finite and non-negative, got {k}"
            )));
        }
        let mut scaled = self.clone();
        scaled.multiplier = self.multiplier * k;
        scaled.validate()?;
        Ok(scaled)
    }

    fn clamp_prob(&self, p: f64) -> f64 {
        (p * self.multiplier).min(1.0)
    }

    pub fn effective_p_1q(&self) -> f64 {
        self.clamp_prob(self.p_1q)
    }

    pub fn effective_p_2q(&self) -> f64 {
        self.clamp_prob(self.p_2q)
    }

    pub fn effective_p_readout(&self) -> f64 {
        self.clamp_prob(self.p_readout)
    }

    /// Whether any scaled probability ran into the clamp at one, i.e. the
    /// model left the regime where scaling is faithful.
    pub fn clamped(&self) -> bool {
        [self.p_1q, self.p_2q, self.p_readout]
            .iter()
            .any(|p| p * self.multiplier > 1.0)
    }

    /// Effective amplitude-damping time (`t1 / multiplier`; infinite for a
    /// noiseless model, which makes thermal factors collapse to identity).
    pub fn effective_t1_us(&self) -> f64 {
        self.t1_us / self.multiplier
    }

    pub fn effective_t2_us(&self) -> f64 {
        self.t2_us / self.multiplier
    }

    /// Per-wire probability of the local depolarizing channels attached to
    /// a two-qubit gate, chosen so that two independent local channels
    /// leave the pair fully depolarized with probability `effective_p_2q`:
    /// `(1 - p_local)^2 = 1 - p_2q`.
    pub fn local_pair_p(&self) -> f64 {
        1.0 - (1.0 - self.effective_p_2q()).sqrt()
    }

    /// Wall time a gate occupies in the schedule. Injected coherent gates
    /// are free, and virtual `RZ` (when enabled) is free.
    pub fn gate_duration_us(&self, gate: &Gate) -> f64 {
        if gate.injected || (self.rz_is_virtual && gate.kind == GateKind::Rz) {
            0.0
        } else if gate.is_two_qubit() {
            self.dur_2q_us
        } else {
            self.dur_1q_us
        }
    }

    /// Whether a gate carries an incoherent error channel at all.
    pub fn gate_is_noisy(&self, gate: &Gate) -> bool {
        !gate.injected && !(self.rz_is_virtual && gate.kind == GateKind::Rz)
    }

    /// Thermal relaxation channel over `duration_us` at the effective
    /// coherence times, or `None` when it would be the identity.
    pub fn thermal_channel(&self, duration_us: f64) -> Option<Channel> {
        if duration_us <= 0.0 || self.multiplier == 0.0 {
            return None;
        }
        if self.effective_t1_us().is_infinite() && self.effective_t2_us().is_infinite() {
            return None;
        }
        Some(
            Channel::thermal(duration_us, self.effective_t1_us(), self.effective_t2_us())
                .expect("validated model yields a valid thermal channel"),
        )
    }
}

/// A single error channel as applied by the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Full replacement on one qubit: `rho -> (1-p) rho + p I/2`.
    Depolarizing1q { p: f64 },
    /// Full replacement on a qubit pair: `rho -> (1-p) rho + p I/4`.
    JointDepolarizing2q { p: f64 },
    /// Amplitude damping (`gamma`) combined with dephasing so that
    /// off-diagonal elements shrink by exactly `offdiag`.
    Thermal { gamma: f64, offdiag: f64 },
}

impl Channel {
    pub fn depolarizing_1q(p: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "depolarizing probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(Channel::Depolarizing1q { p })
    }

    pub fn joint_depolarizing_2q(p: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "depolarizing probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(Channel::JointDepolarizing2q { p })
    }

    /// Thermal relaxation over `duration_us`: excited population decays by
    /// `gamma = 1 - exp(-t/t1)` and coherences by exactly `exp(-t/t2)`.
    pub fn thermal(duration_us: f64, t1_us: f64, t2_us: f64) -> Result<Channel> {
        if duration_us < 0.0 {
            return Err(Error::InvalidArgument("duration must be non-negative".into()));
        }
        if t1_us <= 0.0 || t1_us.is_nan() || t2_us <= 0.0 || t2_us.is_nan() {
            return Err(Error::InvalidArgument(
                "coherence times must be positive".into(),
            ));
        }
        if t2_us > 2.0 * t1_us {
            return Err(Error::InvalidArgument(format!(
                "t2 = {t2_us} exceeds the physical bound 2 * t1 = {}",
                2.0 * t1_us
            )));
        }
        Ok(Channel::Thermal {
            gamma: 1.0 - (-duration_us / t1_us).exp(),
            offdiag: (-duration_us / t2_us).exp(),
        })
    }

    /// Kraus operators for the one-qubit channels, used as an independent
    /// cross-check of the simulator's direct channel formulas.
    pub fn kraus1(&self) -> Option<Vec<Mat2>> {
        match *self {
            Channel::Depolarizing1q { p } => {
                // Full replacement equals the standard Pauli channel with
                // weight 3p/4 split evenly over X, Y, Z.
                let w_id = (1.0 - 0.75 * p).sqrt();
                let w_pauli = (0.25 * p).sqrt();
                Some(vec![
                    [[c(w_id), ZERO], [ZERO, c(w_id)]],
                    [[ZERO, c(w_pauli)], [c(w_pauli), ZERO]],
                    [[ZERO, ci(0.0, -w_pauli)], [ci(0.0, w_pauli), ZERO]],
                    [[c(w_pauli), ZERO], [ZERO, c(-w_pauli)]],
                ])
            }
            Channel::Thermal { gamma, offdiag } => {
                // Damping Kraus pair, then extra dephasing to land the
                // off-diagonal factor exactly on `offdiag`.
                let k0 = [[c(1.0), ZERO], [ZERO, c((1.0 - gamma).sqrt())]];
                let k1 = [[ZERO, c(gamma.sqrt())], [ZERO, ZERO]];
                let damping_offdiag = (1.0 - gamma).sqrt();
                let extra = if damping_offdiag > 0.0 {
                    (offdiag / damping_offdiag).min(1.0)
                } else {
                    0.0
                };
                let q = (1.0 - extra) / 2.0;
                let keep = (1.0 - q).sqrt();
                let flip = q.sqrt();
                let mut kraus = Vec::with_capacity(4);
                for k in [k0, k1] {
                    kraus.push([
                        [k[0][0] * keep, k[0][1] * keep],
                        [k[1][0] * keep, k[1][1] * keep],
                    ]);
                    // Z times k, scaled by sqrt(q).
                    kraus.push([
                        [k[0][0] * flip, k[0][1] * flip],
                        [-k[1][0] * flip, -k[1][1] * flip],
                    ]);
                }
                Some(kraus)
            }
            Channel::JointDepolarizing2q { .. } => None,
        }
    }
}

/// A copy of `circuit` with a coherent `RX(angle)` over-rotation appended to
/// both wires of every two-qubit gate. The inserted gates are marked
/// injected: the simulator applies their unitaries, but scheduling, gate
/// counts and gate classification ignore them. `angle = 0` returns the
/// circuit unchanged.
pub fn inject_coherent(circuit: &Circuit, angle_rad: f64) -> Circuit {
    if angle_rad == 0.0 {
        return circuit.clone();
    }
    let mut gates = Vec::with_capacity(circuit.gates.len() * 2);
    for gate in &circuit.gates {
        let two_qubit = gate.is_two_qubit() && !gate.injected;
        let wires: Vec<usize> = gate.qubits().to_vec();
        gates.push(gate.clone());
        if two_qubit {
            for q in wires {
                gates.push(Gate::rx(q, angle_rad).injected());
            }
        }
    }
    Circuit {
        n_qubits: circuit.n_qubits,
        gates,
        measured: circuit.measured.clone(),
        basis_change: circuit.basis_change.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::mat::{mat2_dagger, mat2_mul, C64};
    use nalgebra::{Matrix4, SymmetricEigen};
    use rand::Rng;

    #[test]
    fn kingston_defaults_are_pinned() {
        let m = NoiseModel::kingston();
        assert_eq!(m.p_1q, 2.25e-4);
        assert_eq!(m.p_2q, 2.07e-3);
        assert_eq!(m.p_readout, 7.32e-3);
        assert_eq!(m.t1_us, 270.0);
        assert_eq!(m.t2_us, 143.0);
        assert_eq!(m.dur_1q_us, 6.8e-3);
        assert_eq!(m.dur_2q_us, 6.8e-2);
        assert_eq!(m.multiplier, 1.0);
        m.validate().expect("defaults must validate");
    }

    #[test]
    fn scaling_moves_probabilities_up_and_times_down() {
        let m = NoiseModel::kingston().scale(3.0).unwrap();
        assert!((m.effective_p_1q() - 3.0 * 2.25e-4).abs() < 1e-18);
        assert!((m.effective_p_2q() - 3.0 * 2.07e-3).abs() < 1e-18);
        assert!((m.effective_t1_us() - 90.0).abs() < 1e-12);
        assert!((m.effective_t2_us() - 143.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.dur_2q_us, 6.8e-2, "durations are not scaled");
        assert!(!m.clamped());
        // Scaling composes multiplicatively.
        let twice = m.scale(2.0).unwrap();
        assert_eq!(twice.multiplier, 6.0);
    }

    #[test]
    fn extreme_scaling_clamps_and_flags() {
        let m = NoiseModel::kingston().scale(1e6).unwrap();
        assert_eq!(m.effective_p_2q(), 1.0);
        assert!(m.clamped());
        let gentle = NoiseModel::kingston().scale(10.0).unwrap();
        assert!(!gentle.clamped());
    }

    #[test]
    fn zero_multiplier_is_noiseless() {
        let m = NoiseModel::kingston().scale(0.0).unwrap();
        assert_eq!(m.effective_p_1q(), 0.0);
        assert!(m.thermal_channel(1.0).is_none());
        assert!(m.effective_t1_us().is_infinite());
    }

    #[test]
    fn local_pair_probability_composes_to_pair_error() {
        let m = NoiseModel::kingston();
        let p_local = m.local_pair_p();
        assert!(
            ((1.0 - p_local) * (1.0 - p_local) - (1.0 - m.effective_p_2q())).abs() < 1e-15,
            "two local channels must reproduce the pair error rate"
        );
        assert!((p_local - 1.0355e-3).abs() < 1e-6);
    }

    #[test]
    fn thermal_factors_match_exponentials() {
        let ch = Channel::thermal(6.8e-2, 270.0, 143.0).unwrap();
        match ch {
            Channel::Thermal { gamma, offdiag } => {
                assert_eq!(gamma, 1.0 - (-6.8e-2f64 / 270.0).exp());
                assert_eq!(offdiag, (-6.8e-2f64 / 143.0).exp());
            }
            _ => panic!("expected a thermal channel"),
        }
    }

    #[test]
    fn unphysical_parameters_are_rejected() {
        assert!(Channel::thermal(1.0, 100.0, 201.0).is_err());
        assert!(Channel::thermal(-1.0, 100.0, 100.0).is_err());
        assert!(Channel::depolarizing_1q(-0.1).is_err());
        assert!(Channel::depolarizing_1q(1.5).is_err());
        let mut m = NoiseModel::kingston();
        m.t2_us = 600.0;
        assert!(m.validate().is_err());
        assert!(NoiseModel::kingston().scale(-1.0).is_err());
    }

    fn kraus_completeness(kraus: &[Mat2]) -> f64 {
        let mut acc = [[ZERO; 2]; 2];
        for k in kraus {
            let prod = mat2_mul(&mat2_dagger(k), k);
            for i in 0..2 {
                for j in 0..2 {
                    acc[i][j] += prod[i][j];
                }
            }
        }
        let id = crate::mat::pauli_mat(0);
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((acc[i][j] - id[i][j]).norm());
            }
        }
        worst
    }

    fn choi_min_eigenvalue(kraus: &[Mat2]) -> f64 {
        // Choi matrix: sum over basis |i><j| of |i><j| (tensor) E(|i><j|).
        let mut choi = Matrix4::<C64>::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut basis = [[ZERO; 2]; 2];
                basis[i][j] = crate::mat::ONE;
                let mut out = [[ZERO; 2]; 2];
                for k in kraus {
                    let t = mat2_mul(&mat2_mul(k, &basis), &mat2_dagger(k));
                    for a in 0..2 {
                        for b in 0..2 {
                            out[a][b] += t[a][b];
                        }
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        choi[(2 * i + a, 2 * j + b)] += out[a][b];
                    }
                }
            }
        }
        SymmetricEigen::new(choi)
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    #[test]
    fn random_channels_are_completely_positive_and_trace_preserving() {
        let mut rng = crate::rng::derive_rng(31, "cptp", &[]);
        for trial in 0..200 {
            let channel = if trial % 2 == 0 {
                Channel::depolarizing_1q(rng.gen::<f64>()).unwrap()
            } else {
                let t1 = 1.0 + rng.gen::<f64>() * 400.0;
                let t2 = rng.gen::<f64>() * 2.0 * t1;
                Channel::thermal(rng.gen::<f64>() * 10.0, t1, t2.max(1e-3)).unwrap()
            };
            let kraus = channel.kraus1().expect("one-qubit channel");
            assert!(
                kraus_completeness(&kraus) < 1e-12,
                "trial {trial}: {channel:?} is not trace preserving"
            );
            assert!(
                choi_min_eigenvalue(&kraus) > -1e-12,
                "trial {trial}: {channel:?} is not completely positive"
            );
        }
    }

    #[test]
    fn coherent_injection_wraps_two_qubit_gates() {
        let c = Circuit::new(
            3,
            vec![Gate::sx(0), Gate::cz(0, 1), Gate::rzz(1, 2, 0.3), Gate::x(2)],
            [0],
        )
        .unwrap();
        let injected = inject_coherent(&c, 0.15);
        assert_eq!(injected.gates.len(), 4 + 2 * 2);
        let marked: Vec<&Gate> = injected.gates.iter().filter(|g| g.injected).collect();
        assert_eq!(marked.len(), 4);
        assert!(marked
            .iter()
            .all(|g| g.kind == GateKind::Rx && g.angle == Some(0.15)));
        // Counts and classification do not see the injected gates.
        assert_eq!(injected.one_qubit_gate_count(), c.one_qubit_gate_count());
        assert_eq!(injected.two_qubit_gate_count(), 2);
        assert_eq!(
            injected.classify_gates().pool_size() + injected.classify_gates().companion.len(),
            c.classify_gates().pool_size() + c.classify_gates().companion.len()
        );
        // Zero angle is the identity transformation.
        assert_eq!(inject_coherent(&c, 0.0), c);
    }

    #[test]
    fn noise_model_serde_round_trip() {
        let m = NoiseModel::kingston().scale(2.5).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: NoiseModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        // Partial configs fall back to device defaults.
        let partial: NoiseModel = serde_json::from_str(r#"{"p_2q": 0.01}"#).unwrap();
        assert_eq!(partial.p_2q, 0.01);
        assert_eq!(partial.t1_us, 270.0);
    }
}
