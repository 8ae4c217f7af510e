//! Pauli twirling of entangling gates.
//!
//! Each `CZ` is sandwiched in a random Pauli frame `(a, b)` before and
//! `(a', b')` after, chosen so the ideal unitary is unchanged up to global
//! phase. Averaging over frames converts coherent error on the gate into
//! stochastic Pauli error, which the depolarization-based estimators can
//! then calibrate away. The post frame is computed by conjugation at run
//! time rather than hard-coded.
//!
//! Readout twirling is handled classically during sampling (see
//! [`crate::simulator::sample`]); this module covers the gate frames and the
//! shot-weighted ensemble average.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{decompose_one_qubit, Circuit, Gate, GateKind, Pauli};
use crate::error::{Error, Result};
use crate::mat::{kron2, mat4_mul, phase_free_distance, Mat4};
use crate::noise::NoiseModel;
use crate::rng::{derive_rng, derive_seed};
use crate::simulator::sample;

/// Ensemble size used when twirling is enabled without an explicit count.
pub const DEFAULT_TWIRLS: usize = 250;

const PAULIS: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

/// The 16-entry twirl table for a two-qubit gate kind: entry `[a][b]` is the
/// post-gate Pauli pair `(a', b')` with `(a' (x) b') U (a (x) b) = U` up to
/// global phase. Only `CZ` is supported.
pub fn twirl_table(kind: GateKind) -> Result<&'static [[(Pauli, Pauli); 4]; 4]> {
    if kind != GateKind::Cz {
        return Err(Error::InvalidArgument(format!(
            "no twirl table for {kind:?}; only CZ gates are twirled"
        )));
    }
    static TABLE: OnceLock<[[(Pauli, Pauli); 4]; 4]> = OnceLock::new();
    Ok(TABLE.get_or_init(|| {
        let cz = Gate::cz(0, 1).matrix2().expect("CZ is a two-qubit gate");
        let mut table = [[(Pauli::I, Pauli::I); 4]; 4];
        for (i, &a) in PAULIS.iter().enumerate() {
            for (j, &b) in PAULIS.iter().enumerate() {
                table[i][j] = solve_post_frame(&cz, a, b)
                    .expect("every Pauli pair conjugates through CZ to a Pauli pair");
            }
        }
        table
    }))
}

/// Finds the Pauli pair proportional to `U (a (x) b) U'`, i.e. the frame
/// that moves `(a, b)` from before the gate to after it.
fn solve_post_frame(u: &Mat4, a: Pauli, b: Pauli) -> Option<(Pauli, Pauli)> {
    let pre = kron2(&a.matrix(), &b.matrix());
    let conj = mat4_mul(&mat4_mul(u, &pre), &crate::mat::mat4_dagger(u));
    for &c in &PAULIS {
        for &d in &PAULIS {
            let candidate = kron2(&c.matrix(), &d.matrix());
            let flat_a: Vec<_> = conj.iter().flatten().copied().collect();
            let flat_b: Vec<_> = candidate.iter().flatten().copied().collect();
            if phase_free_distance(&flat_a, &flat_b) < 1e-12 {
                return Some((c, d));
            }
        }
    }
    None
}

/// Emits a Pauli as basis gates through the one-qubit decomposition; the
/// identity emits nothing.
pub fn pauli_gates(pauli: Pauli, qubit: usize) -> Vec<Gate> {
    decompose_one_qubit(&pauli.matrix(), qubit).expect("Pauli matrices are unitary")
}

/// Wraps every `CZ` in `circuit` with an independent uniform Pauli frame.
/// The ideal unitary is unchanged up to global phase; the frame gates are
/// ordinary noisy one-qubit gates. Injected coherent-error gates attached
/// to a `CZ` stay inside its frame, so twirling acts on the noisy gate as a
/// unit. Circuits containing `RZZ` cannot be twirled.
pub fn twirl_circuit(circuit: &Circuit, rng: &mut impl Rng) -> Result<Circuit> {
    let table = twirl_table(GateKind::Cz)?;
    let mut gates = Vec::with_capacity(circuit.gates.len());
    let mut i = 0;
    while i < circuit.gates.len() {
        let gate = circuit.gates[i].clone();
        if gate.injected || !gate.is_two_qubit() {
            gates.push(gate);
            i += 1;
            continue;
        }
        if gate.kind != GateKind::Cz {
            return Err(Error::InvalidArgument(format!(
                "cannot twirl a circuit containing {:?} gates",
                gate.kind
            )));
        }
        let (qa, qb) = (gate.qubits()[0], gate.qubits()[1]);
        let pick = rng.gen_range(0..16usize);
        let (a, b) = (PAULIS[pick / 4], PAULIS[pick % 4]);
        let (c, d) = table[pick / 4][pick % 4];
        gates.extend(pauli_gates(a, qa));
        gates.extend(pauli_gates(b, qb));
        gates.push(gate);
        i += 1;
        while i < circuit.gates.len() && circuit.gates[i].injected {
            gates.push(circuit.gates[i].clone());
            i += 1;
        }
        gates.extend(pauli_gates(c, qa));
        gates.extend(pauli_gates(d, qb));
    }
    Ok(Circuit {
        n_qubits: circuit.n_qubits,
        gates,
        measured: circuit.measured.clone(),
        basis_change: circuit.basis_change.clone(),
    })
}

/// Shot-weighted average of the sampled expectation over `n_twirls`
/// independently twirled instances of `circuit`. Shots are split as evenly
/// as possible with the remainder on the first instances; instances
/// evaluate in parallel and the result is seed-deterministic.
pub fn twirl_ensemble_estimate(
    circuit: &Circuit,
    model: &NoiseModel,
    n_twirls: usize,
    shots: u64,
    twirl_readout: bool,
    seed: u64,
) -> Result<f64> {
    if n_twirls == 0 {
        return Err(Error::InvalidArgument("twirl count must be positive".into()));
    }
    let splits = crate::mitigation::split_shots(shots, n_twirls)?;
    let weighted: f64 = splits
        .par_iter()
        .enumerate()
        .map(|(i, &instance_shots)| -> Result<f64> {
            let mut rng = derive_rng(seed, "twirl-frame", &[i as u64]);
            let twirled = twirl_circuit(circuit, &mut rng)?;
            let data = sample(
                &twirled,
                model,
                instance_shots,
                twirl_readout,
                derive_seed(seed, "twirl-shots", &[i as u64]),
            )?;
            Ok(data.signed_mean_product()? * instance_shots as f64)
        })
        .sum::<Result<f64>>()?;
    Ok(weighted / shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::inject_coherent;
    use crate::simulator::{circuit_unitary, exact_expectation, exact_noisy_expectation};

    #[test]
    fn table_fixes_identity_and_known_pair() {
        let table = twirl_table(GateKind::Cz).unwrap();
        assert_eq!(table[0][0], (Pauli::I, Pauli::I));
        // CZ (X (x) I) CZ = X (x) Z.
        assert_eq!(table[1][0], (Pauli::X, Pauli::Z));
    }

    #[test]
    fn all_sixteen_frames_preserve_cz() {
        let table = twirl_table(GateKind::Cz).unwrap();
        let cz = Gate::cz(0, 1).matrix2().unwrap();
        for (i, &a) in PAULIS.iter().enumerate() {
            for (j, &b) in PAULIS.iter().enumerate() {
                let (c, d) = table[i][j];
                let pre = kron2(&a.matrix(), &b.matrix());
                let post = kron2(&c.matrix(), &d.matrix());
                let framed = mat4_mul(&post, &mat4_mul(&cz, &pre));
                let fa: Vec<_> = framed.iter().flatten().copied().collect();
                let fb: Vec<_> = cz.iter().flatten().copied().collect();
                assert!(
                    phase_free_distance(&fa, &fb) < 1e-12,
                    "frame ({a}, {b}) -> ({c}, {d}) does not preserve CZ"
                );
            }
        }
    }

    #[test]
    fn only_cz_has_a_table() {
        assert!(twirl_table(GateKind::Rzz).is_err());
        assert!(twirl_table(GateKind::Rx).is_err());
    }

    #[test]
    fn twirled_circuit_keeps_the_unitary_up_to_phase() {
        let mut rng = derive_rng(61, "twirl-unitary", &[]);
        for trial in 0..30 {
            let circuit = loop {
                let c = crate::circuit::tests::random_circuit(&mut rng, 3, 12);
                if c.gates.iter().all(|g| g.kind != GateKind::Rzz) {
                    break c;
                }
            };
            let twirled = twirl_circuit(&circuit, &mut rng).unwrap();
            let u = circuit_unitary(&circuit).unwrap();
            let v = circuit_unitary(&twirled).unwrap();
            let dist = phase_free_distance(&u, &v);
            assert!(dist < 1e-9, "trial {trial}: twirl changed the unitary by {dist}");
        }
    }

    #[test]
    fn twirl_without_entanglers_is_identity() {
        let circuit = Circuit::new(2, vec![Gate::sx(0), Gate::rz(1, 0.3)], [0]).unwrap();
        let mut rng = derive_rng(67, "twirl-noop", &[]);
        assert_eq!(twirl_circuit(&circuit, &mut rng).unwrap(), circuit);
    }

    #[test]
    fn twirl_is_seed_deterministic() {
        let circuit = Circuit::new(2, vec![Gate::sx(0), Gate::cz(0, 1)], [0]).unwrap();
        let a = twirl_circuit(&circuit, &mut derive_rng(5, "t", &[])).unwrap();
        let b = twirl_circuit(&circuit, &mut derive_rng(5, "t", &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rzz_circuits_are_rejected() {
        let circuit = Circuit::new(2, vec![Gate::rzz(0, 1, 0.4)], [0]).unwrap();
        let mut rng = derive_rng(71, "twirl-rzz", &[]);
        assert!(twirl_circuit(&circuit, &mut rng).is_err());
    }

    #[test]
    fn injected_gates_stay_inside_the_frame() {
        let circuit = Circuit::new(2, vec![Gate::cz(0, 1)], [0]).unwrap();
        let noisy = inject_coherent(&circuit, 0.15);
        // Draw frames until a non-identity post frame shows up, then check
        // the injected gates sit between the CZ and the post frame.
        let mut rng = derive_rng(73, "twirl-frame-order", &[]);
        for _ in 0..50 {
            let twirled = twirl_circuit(&noisy, &mut rng).unwrap();
            let cz_at = twirled
                .gates
                .iter()
                .position(|g| g.kind == GateKind::Cz)
                .expect("CZ survives twirling");
            assert!(twirled.gates[cz_at + 1].injected);
            assert!(twirled.gates[cz_at + 2].injected);
            // The ideal unitary (injected gates skipped) stays the identity
            // up to phase, so the frame still closes around the gate.
            assert!((exact_expectation(&twirled).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_estimate_tracks_the_noiseless_value_without_noise() {
        let circuit = Circuit::new(
            2,
            crate::circuit::ry_gates(0.8, 0)
                .into_iter()
                .chain([Gate::cz(0, 1)])
                .collect(),
            [0],
        )
        .unwrap();
        let noiseless = NoiseModel::kingston().scale(0.0).unwrap();
        let shots = 400_000;
        let est = twirl_ensemble_estimate(&circuit, &noiseless, 8, shots, true, 3).unwrap();
        let truth = 0.8f64.cos();
        let sigma = ((1.0 - truth * truth) / shots as f64).sqrt();
        assert!((est - truth).abs() < 5.0 * sigma);
        // Determinism.
        let again = twirl_ensemble_estimate(&circuit, &noiseless, 8, shots, true, 3).unwrap();
        assert_eq!(est, again);
    }

    #[test]
    fn twirling_averages_away_coherent_overrotation() {
        // Strong coherent error on a CZ chain; the ensemble mean of exact
        // expectations should land much closer to the ideal value than the
        // untwirled circuit does.
        let base = Circuit::new(
            2,
            crate::circuit::ry_gates(0.9, 0)
                .into_iter()
                .chain([Gate::cz(0, 1), Gate::cz(0, 1)])
                .collect(),
            [0],
        )
        .unwrap();
        let noisy = inject_coherent(&base, 0.3);
        let ideal = exact_expectation(&base).unwrap();
        let model = NoiseModel::kingston().scale(0.0).unwrap();
        let plain = exact_noisy_expectation(&noisy, &model).unwrap();
        let mut rng = derive_rng(79, "twirl-coherent", &[]);
        let mut total = 0.0;
        let n = 400;
        for _ in 0..n {
            let twirled = twirl_circuit(&noisy, &mut rng).unwrap();
            total += exact_noisy_expectation(&twirled, &model).unwrap();
        }
        let ensemble = total / n as f64;
        assert!(
            (plain - ideal).abs() > 0.01,
            "test premise: the untwirled coherent bias is visible, got {}",
            (plain - ideal).abs()
        );
        // Twirling converts the coherent shift into stochastic damping; the
        // residual bias is what the depolarization estimators then remove.
        assert!(
            (ensemble - ideal).abs() < 0.7 * (plain - ideal).abs(),
            "twirling should suppress coherent bias: ensemble {ensemble}, plain {plain}, ideal {ideal}"
        );
    }
}
