//! Dense statevector and density-matrix simulation with scheduled noise.
//!
//! Circuits are simulated layer by layer. Layers are built greedily in gate
//! order (a gate joins the earliest layer where its qubits are free), every
//! layer lasts as long as its slowest gate, gates carry their depolarizing
//! channels, and qubits without a timed gate in a layer relax thermally for
//! the layer duration. Pre-measurement basis-change gates are scheduled
//! after a barrier so they cannot drift into idle slots of the main circuit.
//!
//! Measurement statistics come from [`sample`], which draws per-shot
//! bitstrings from the exact measured-qubit distribution, optionally applies
//! a random readout twirl, and then applies readout flips.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::mat::{Mat2, Mat4, C64, ZERO};
use crate::noise::{Channel, NoiseModel};

/// Largest register the dense density-matrix simulator accepts.
pub const MAX_QUBITS: usize = 10;

/// Shots per parallel sampling block; results are block-deterministic, so
/// they do not depend on the number of worker threads.
const SHOT_BLOCK: u64 = 1 << 20;

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::ResourceLimit(format!(
            "dense simulation supports at most {MAX_QUBITS} qubits, got {n_qubits}"
        )));
    }
    Ok(())
}

/// A pure state over `n_qubits` qubits; basis state `i` assigns qubit `q`
/// the bit `(i >> q) & 1`.
#[derive(Debug, Clone)]
pub struct Statevector {
    pub n_qubits: usize,
    pub amps: Vec<C64>,
}

impl Statevector {
    /// The all-zeros computational basis state.
    pub fn zero(n_qubits: usize) -> Result<Statevector> {
        check_size(n_qubits)?;
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = crate::mat::ONE;
        Ok(Statevector { n_qubits, amps })
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        if let Some(m) = gate.matrix1() {
            apply_mat1(&mut self.amps, &m, gate.qubits()[0]);
        } else if let Some(m) = gate.matrix2() {
            apply_mat2(&mut self.amps, &m, gate.qubits()[0], gate.qubits()[1]);
        }
    }

    /// Expectation of the product of `Z` over `qubits`.
    pub fn z_product_expectation(&self, qubits: impl IntoIterator<Item = usize>) -> f64 {
        let mask: usize = qubits.into_iter().fold(0, |m, q| m | (1 << q));
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| parity_sign(i & mask) * a.norm_sqr())
            .sum()
    }
}

fn parity_sign(bits: usize) -> f64 {
    if bits.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Applies a `2x2` matrix to amplitude pairs along qubit `q`.
fn apply_mat1(amps: &mut [C64], m: &Mat2, q: usize) {
    let mask = 1 << q;
    let dim = amps.len();
    let mut i0 = 0;
    while i0 < dim {
        if i0 & mask == 0 {
            let i1 = i0 | mask;
            let a = amps[i0];
            let b = amps[i1];
            amps[i0] = m[0][0] * a + m[0][1] * b;
            amps[i1] = m[1][0] * a + m[1][1] * b;
        }
        i0 += 1;
    }
}

/// Applies a `4x4` matrix along qubits `(qh, ql)`, `qh` the high bit of the
/// local index.
fn apply_mat2(amps: &mut [C64], m: &Mat4, qh: usize, ql: usize) {
    let mh = 1 << qh;
    let ml = 1 << ql;
    let dim = amps.len();
    let offsets = [0, ml, mh, mh | ml];
    for base in 0..dim {
        if base & (mh | ml) != 0 {
            continue;
        }
        let mut v = [ZERO; 4];
        for (k, &off) in offsets.iter().enumerate() {
            v[k] = amps[base | off];
        }
        for (k, &off) in offsets.iter().enumerate() {
            amps[base | off] = m[k][0] * v[0] + m[k][1] * v[1] + m[k][2] * v[2] + m[k][3] * v[3];
        }
    }
}

/// The full unitary of the main gate list as a `dim x dim` row-major matrix
/// (basis-change gates are not included).
pub fn circuit_unitary(circuit: &Circuit) -> Result<Vec<C64>> {
    check_size(circuit.n_qubits)?;
    let dim = 1usize << circuit.n_qubits;
    let mut columns: Vec<Statevector> = (0..dim)
        .map(|j| {
            let mut amps = vec![ZERO; dim];
            amps[j] = crate::mat::ONE;
            Statevector {
                n_qubits: circuit.n_qubits,
                amps,
            }
        })
        .collect();
    for col in &mut columns {
        for gate in &circuit.gates {
            col.apply_gate(gate);
        }
    }
    let mut u = vec![ZERO; dim * dim];
    for (j, col) in columns.iter().enumerate() {
        for i in 0..dim {
            u[i * dim + j] = col.amps[i];
        }
    }
    Ok(u)
}

/// Noise-free expectation of the measured observable: the main gates
/// (skipping injected coherent-error gates) and the basis change applied to
/// the all-zeros state, then the `Z`-product over the measured qubits.
pub fn exact_expectation(circuit: &Circuit) -> Result<f64> {
    circuit.validate()?;
    let mut state = Statevector::zero(circuit.n_qubits)?;
    for gate in circuit.gates.iter().filter(|g| !g.injected) {
        state.apply_gate(gate);
    }
    for gate in &circuit.basis_change {
        state.apply_gate(gate);
    }
    Ok(state.z_product_expectation(circuit.measured.iter().copied()))
}

/// A dense density matrix, row-major `rho[i * dim + j]`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub n_qubits: usize,
    pub rho: Vec<C64>,
}

impl DensityMatrix {
    /// The pure all-zeros state.
    pub fn zero(n_qubits: usize) -> Result<DensityMatrix> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut rho = vec![ZERO; dim * dim];
        rho[0] = crate::mat::ONE;
        Ok(DensityMatrix { n_qubits, rho })
    }

    pub fn from_statevector(state: &Statevector) -> DensityMatrix {
        let dim = state.amps.len();
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                rho[i * dim + j] = state.amps[i] * state.amps[j].conj();
            }
        }
        DensityMatrix {
            n_qubits: state.n_qubits,
            rho,
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn trace(&self) -> C64 {
        let dim = self.dim();
        (0..dim).map(|i| self.rho[i * dim + i]).sum()
    }

    /// `rho -> M rho M'` for a one-qubit matrix `M` on qubit `q` (a unitary
    /// update when `M` is unitary; one Kraus term otherwise).
    pub fn conjugate_1q(&mut self, m: &Mat2, q: usize) {
        let dim = self.dim();
        // Left-multiply rows, treating each column as a vector.
        let mask = 1 << q;
        for j in 0..dim {
            for i0 in 0..dim {
                if i0 & mask != 0 {
                    continue;
                }
                let i1 = i0 | mask;
                let a = self.rho[i0 * dim + j];
                let b = self.rho[i1 * dim + j];
                self.rho[i0 * dim + j] = m[0][0] * a + m[0][1] * b;
                self.rho[i1 * dim + j] = m[1][0] * a + m[1][1] * b;
            }
        }
        // Right-multiply columns by the dagger.
        for i in 0..dim {
            let row = &mut self.rho[i * dim..(i + 1) * dim];
            for j0 in 0..dim {
                if j0 & mask != 0 {
                    continue;
                }
                let j1 = j0 | mask;
                let a = row[j0];
                let b = row[j1];
                row[j0] = a * m[0][0].conj() + b * m[0][1].conj();
                row[j1] = a * m[1][0].conj() + b * m[1][1].conj();
            }
        }
    }

    /// `rho -> M rho M'` for a two-qubit matrix on `(qh, ql)`.
    pub fn conjugate_2q(&mut self, m: &Mat4, qh: usize, ql: usize) {
        let dim = self.dim();
        let mh = 1 << qh;
        let ml = 1 << ql;
        let offsets = [0, ml, mh, mh | ml];
        for j in 0..dim {
            for base in 0..dim {
                if base & (mh | ml) != 0 {
                    continue;
                }
                let mut v = [ZERO; 4];
                for (k, &off) in offsets.iter().enumerate() {
                    v[k] = self.rho[(base | off) * dim + j];
                }
                for (k, &off) in offsets.iter().enumerate() {
                    self.rho[(base | off) * dim + j] =
                        m[k][0] * v[0] + m[k][1] * v[1] + m[k][2] * v[2] + m[k][3] * v[3];
                }
            }
        }
        for i in 0..dim {
            let row = &mut self.rho[i * dim..(i + 1) * dim];
            for base in 0..dim {
                if base & (mh | ml) != 0 {
                    continue;
                }
                let mut v = [ZERO; 4];
                for (k, &off) in offsets.iter().enumerate() {
                    v[k] = row[base | off];
                }
                for (k, &off) in offsets.iter().enumerate() {
                    row[base | off] = v[0] * m[k][0].conj()
                        + v[1] * m[k][1].conj()
                        + v[2] * m[k][2].conj()
                        + v[3] * m[k][3].conj();
                }
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        if let Some(m) = gate.matrix1() {
            self.conjugate_1q(&m, gate.qubits()[0]);
        } else if let Some(m) = gate.matrix2() {
            self.conjugate_2q(&m, gate.qubits()[0], gate.qubits()[1]);
        }
    }

    /// Applies an error channel to `qubits` (one qubit for the one-qubit
    /// channels, the pair for the joint channel).
    pub fn apply_channel(&mut self, channel: &Channel, qubits: &[usize]) {
        match *channel {
            Channel::Depolarizing1q { p } => self.depolarize_1q(p, qubits[0]),
            Channel::Thermal { gamma, offdiag } => self.thermal(gamma, offdiag, qubits[0]),
            Channel::JointDepolarizing2q { p } => self.depolarize_2q_joint(p, qubits[0], qubits[1]),
        }
    }

    /// `rho -> (1-p) rho + p (I/2 tensor tr_q rho)`, in place via 2x2
    /// blocks over bit `q` of row and column indices.
    fn depolarize_1q(&mut self, p: f64, q: usize) {
        let dim = self.dim();
        let mask = 1 << q;
        let keep = 1.0 - p;
        let half_p = 0.5 * p;
        for i0 in 0..dim {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            for j0 in 0..dim {
                if j0 & mask != 0 {
                    continue;
                }
                let j1 = j0 | mask;
                let b00 = self.rho[i0 * dim + j0];
                let b11 = self.rho[i1 * dim + j1];
                let mixed = half_p * (b00 + b11);
                self.rho[i0 * dim + j0] = keep * b00 + mixed;
                self.rho[i1 * dim + j1] = keep * b11 + mixed;
                self.rho[i0 * dim + j1] *= keep;
                self.rho[i1 * dim + j0] *= keep;
            }
        }
    }

    /// `rho -> (1-p) rho + p (I/4 tensor tr_pair rho)` on qubits `(a, b)`.
    fn depolarize_2q_joint(&mut self, p: f64, a: usize, b: usize) {
        let dim = self.dim();
        let ma = 1 << a;
        let mb = 1 << b;
        let offsets = [0, mb, ma, ma | mb];
        let keep = 1.0 - p;
        let quarter_p = 0.25 * p;
        for i0 in 0..dim {
            if i0 & (ma | mb) != 0 {
                continue;
            }
            for j0 in 0..dim {
                if j0 & (ma | mb) != 0 {
                    continue;
                }
                let block_trace: C64 = offsets
                    .iter()
                    .map(|&off| self.rho[(i0 | off) * dim + (j0 | off)])
                    .sum();
                for &ri in &offsets {
                    for &rj in &offsets {
                        let idx = (i0 | ri) * dim + (j0 | rj);
                        self.rho[idx] *= keep;
                        if ri == rj {
                            self.rho[idx] += quarter_p * block_trace;
                        }
                    }
                }
            }
        }
    }

    /// Amplitude damping by `gamma` with coherences scaled by `offdiag`.
    fn thermal(&mut self, gamma: f64, offdiag: f64, q: usize) {
        let dim = self.dim();
        let mask = 1 << q;
        let keep = 1.0 - gamma;
        for i0 in 0..dim {
            if i0 & mask != 0 {
                continue;
            }
            let i1 = i0 | mask;
            for j0 in 0..dim {
                if j0 & mask != 0 {
                    continue;
                }
                let j1 = j0 | mask;
                let b11 = self.rho[i1 * dim + j1];
                self.rho[i0 * dim + j0] += gamma * b11;
                self.rho[i1 * dim + j1] = keep * b11;
                self.rho[i0 * dim + j1] *= offdiag;
                self.rho[i1 * dim + j0] *= offdiag;
            }
        }
    }

    /// Expectation of the `Z`-product over `qubits` from the diagonal.
    pub fn z_product_expectation(&self, qubits: impl IntoIterator<Item = usize>) -> f64 {
        let mask: usize = qubits.into_iter().fold(0, |m, q| m | (1 << q));
        let dim = self.dim();
        (0..dim)
            .map(|i| parity_sign(i & mask) * self.rho[i * dim + i].re)
            .sum()
    }

    /// Marginal probabilities over the sorted `measured` qubits; pattern bit
    /// `k` is the value of `measured[k]`. Tiny negative diagonal entries
    /// from round-off are clamped and the distribution is renormalized.
    pub fn measured_distribution(&self, measured: &[usize]) -> Vec<f64> {
        let dim = self.dim();
        let mut probs = vec![0.0; 1 << measured.len()];
        for i in 0..dim {
            let mut pattern = 0usize;
            for (k, &q) in measured.iter().enumerate() {
                pattern |= ((i >> q) & 1) << k;
            }
            probs[pattern] += self.rho[i * dim + i].re.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            for p in &mut probs {
                *p /= total;
            }
        }
        probs
    }
}

/// One scheduling layer: gate indices into the combined gate list and the
/// wall time the layer occupies.
#[derive(Debug, Clone)]
pub struct Layer {
    pub gates: Vec<usize>,
    pub duration_us: f64,
}

/// Greedy as-early-as-possible layering of the main gates followed (after a
/// barrier) by the basis-change gates. Returns the layers plus the combined
/// gate list they index into.
pub fn schedule(circuit: &Circuit, model: &NoiseModel) -> (Vec<Layer>, Vec<Gate>) {
    let mut combined: Vec<Gate> = circuit.gates.clone();
    let barrier_at = combined.len();
    combined.extend(circuit.basis_change.iter().cloned());

    let mut frontier = vec![0usize; circuit.n_qubits];
    let mut layers: Vec<Layer> = Vec::new();
    let mut barrier_level = 0usize;
    for (idx, gate) in combined.iter().enumerate() {
        if idx == barrier_at {
            barrier_level = layers.len();
        }
        let level = gate
            .qubits()
            .iter()
            .map(|&q| frontier[q])
            .max()
            .unwrap_or(0)
            .max(barrier_level);
        if level == layers.len() {
            layers.push(Layer {
                gates: Vec::new(),
                duration_us: 0.0,
            });
        }
        layers[level].gates.push(idx);
        layers[level].duration_us = layers[level].duration_us.max(model.gate_duration_us(gate));
        for &q in gate.qubits() {
            frontier[q] = level + 1;
        }
    }
    (layers, combined)
}

/// Simulates the circuit under the noise model and returns the final
/// density matrix (readout error is not included; sampling and expectation
/// helpers add it).
pub fn run_density(circuit: &Circuit, model: &NoiseModel) -> Result<DensityMatrix> {
    circuit.validate()?;
    model.validate()?;
    let mut rho = DensityMatrix::zero(circuit.n_qubits)?;
    let (layers, gates) = schedule(circuit, model);
    for layer in &layers {
        // Gates in a layer touch disjoint qubits, so unitaries and error
        // channels within the layer commute.
        for &idx in &layer.gates {
            rho.apply_gate(&gates[idx]);
        }
        let mut busy: u128 = 0;
        for &idx in &layer.gates {
            let gate = &gates[idx];
            if model.gate_duration_us(gate) > 0.0 {
                for &q in gate.qubits() {
                    busy |= 1 << q;
                }
            }
            if !model.gate_is_noisy(gate) {
                continue;
            }
            if gate.is_two_qubit() {
                if model.joint_2q_depol {
                    let p = model.effective_p_2q();
                    if p > 0.0 {
                        rho.apply_channel(
                            &Channel::joint_depolarizing_2q(p)?,
                            gate.qubits(),
                        );
                    }
                } else {
                    let p = model.local_pair_p();
                    if p > 0.0 {
                        for &q in gate.qubits() {
                            rho.apply_channel(&Channel::depolarizing_1q(p)?, &[q]);
                        }
                    }
                }
            } else {
                let p = model.effective_p_1q();
                if p > 0.0 {
                    rho.apply_channel(&Channel::depolarizing_1q(p)?, gate.qubits());
                }
            }
        }
        if let Some(thermal) = model.thermal_channel(layer.duration_us) {
            for q in 0..circuit.n_qubits {
                if busy & (1 << q) == 0 {
                    rho.apply_channel(&thermal, &[q]);
                }
            }
        }
    }
    Ok(rho)
}

/// Infinite-shot limit of the plain (untwirled) measured expectation:
/// the simulated `Z`-product expectation shrunk by the readout factor
/// `(1 - 2 p_readout)` per measured qubit.
pub fn exact_noisy_expectation(circuit: &Circuit, model: &NoiseModel) -> Result<f64> {
    let rho = run_density(circuit, model)?;
    let readout = 1.0 - 2.0 * model.effective_p_readout();
    let value = rho.z_product_expectation(circuit.measured.iter().copied());
    Ok(value * readout.powi(circuit.measured.len() as i32))
}

/// Measurement record of a sampling run: counts over (twirl mask, observed
/// bits) pairs for the measured qubits.
///
/// Pattern bit `k` (of both `bits` and `mask`) refers to `measured[k]`.
/// Untwirled runs store mask zero only. Counts are kept as integers so
/// derived means are exactly reproducible.
#[derive(Debug, Clone)]
pub struct ShotData {
    pub measured: Vec<usize>,
    pub twirled: bool,
    pub counts: Vec<u64>,
    pub total_shots: u64,
}

impl ShotData {
    fn n_patterns(&self) -> usize {
        1 << self.measured.len()
    }

    /// Mean of the sign read off `qubit`, with the twirl mask folded back
    /// in: each shot contributes `(-1)^(bits_k + mask_k)`.
    pub fn signed_mean(&self, qubit: usize) -> Result<f64> {
        let k = self
            .measured
            .iter()
            .position(|&q| q == qubit)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("qubit {qubit} is not in the measured set"))
            })?;
        if self.total_shots == 0 {
            return Err(Error::InvalidArgument("no shots recorded".into()));
        }
        let npat = self.n_patterns();
        let mut signed: i128 = 0;
        for (idx, &count) in self.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let bits = idx % npat;
            let mask = idx / npat;
            let sign = ((bits >> k) ^ (mask >> k)) & 1;
            if sign == 0 {
                signed += count as i128;
            } else {
                signed -= count as i128;
            }
        }
        Ok(signed as f64 / self.total_shots as f64)
    }

    /// Mean of the `Z`-product sign over all measured qubits.
    pub fn signed_mean_product(&self) -> Result<f64> {
        if self.total_shots == 0 {
            return Err(Error::InvalidArgument("no shots recorded".into()));
        }
        let npat = self.n_patterns();
        let mut signed: i128 = 0;
        for (idx, &count) in self.counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let bits = idx % npat;
            let mask = idx / npat;
            if (bits ^ mask).count_ones().is_multiple_of(2) {
                signed += count as i128;
            } else {
                signed -= count as i128;
            }
        }
        Ok(signed as f64 / self.total_shots as f64)
    }
}

/// Samples `shots` measurement records from the simulated circuit.
///
/// Each shot draws a bit pattern from the exact measured distribution; with
/// `twirl_readout` a uniformly random flip mask is XOR-ed in before the
/// per-bit readout errors are applied, and the mask is recorded with the
/// observed bits. Sampling is split into fixed-size blocks with one
/// counter-mode RNG stream per block, so results are reproducible and
/// independent of thread count.
pub fn sample(
    circuit: &Circuit,
    model: &NoiseModel,
    shots: u64,
    twirl_readout: bool,
    seed: u64,
) -> Result<ShotData> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shot count must be positive".into()));
    }
    let rho = run_density(circuit, model)?;
    let measured: Vec<usize> = circuit.measured.iter().copied().collect();
    let probs = rho.measured_distribution(&measured);
    let cdf: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let p_readout = model.effective_p_readout();

    let npat = probs.len();
    let nmask = if twirl_readout { npat } else { 1 };
    let k = measured.len();
    let n_blocks = shots.div_ceil(SHOT_BLOCK);
    let counts = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let block_shots = SHOT_BLOCK.min(shots - block * SHOT_BLOCK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let mut local = vec![0u64; nmask * npat];
            for _ in 0..block_shots {
                let u: f64 = rng.gen();
                let mut pattern = cdf.partition_point(|&c| c <= u);
                if pattern >= npat {
                    pattern = npat - 1;
                }
                let mask = if twirl_readout {
                    rng.gen_range(0..npat)
                } else {
                    0
                };
                pattern ^= mask;
                for bit in 0..k {
                    if rng.gen::<f64>() < p_readout {
                        pattern ^= 1 << bit;
                    }
                }
                local[mask * npat + pattern] += 1;
            }
            local
        })
        .reduce(
            || vec![0u64; nmask * npat],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    Ok(ShotData {
        measured,
        twirled: twirl_readout,
        counts,
        total_shots: shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_efficient_su2, decompose_one_qubit, ry_gates, Circuit, Gate};
    use crate::mat::{c, kron2, ONE};
    use rand::Rng;

    fn noiseless() -> NoiseModel {
        NoiseModel::kingston().scale(0.0).unwrap()
    }

    /// A random mixed state from a random square root.
    fn random_density(rng: &mut impl Rng, n: usize) -> DensityMatrix {
        let dim = 1usize << n;
        let mut a = vec![ZERO; dim * dim];
        for entry in a.iter_mut() {
            *entry = crate::mat::ci(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let mut rho = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut acc = ZERO;
                for l in 0..dim {
                    acc += a[i * dim + l] * a[j * dim + l].conj();
                }
                rho[i * dim + j] = acc;
            }
        }
        let mut dm = DensityMatrix { n_qubits: n, rho };
        let tr = dm.trace();
        for entry in dm.rho.iter_mut() {
            *entry /= tr;
        }
        dm
    }

    #[test]
    fn two_qubit_matrix_convention_matches_kron() {
        // Applying kron(a, b) on (qh, ql) must equal applying a on qh and b
        // on ql separately.
        let mut rng = crate::rng::derive_rng(41, "kron-convention", &[]);
        for _ in 0..20 {
            let theta_a = rng.gen::<f64>() * 6.0;
            let theta_b = rng.gen::<f64>() * 6.0;
            let a = Gate::rx(0, theta_a).matrix1().unwrap();
            let b = Gate::rz(0, theta_b).matrix1().unwrap();
            let mut s1 = Statevector::zero(3).unwrap();
            for g in [Gate::sx(0), Gate::sx(1), Gate::sx(2)] {
                s1.apply_gate(&g);
            }
            let mut s2 = s1.clone();
            apply_mat2(&mut s1.amps, &kron2(&a, &b), 2, 0);
            apply_mat1(&mut s2.amps, &a, 2);
            apply_mat1(&mut s2.amps, &b, 0);
            for (x, y) in s1.amps.iter().zip(&s2.amps) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noiseless_density_matches_statevector() {
        let mut rng = crate::rng::derive_rng(43, "dm-vs-sv", &[]);
        for _ in 0..10 {
            let circuit = crate::circuit::tests::random_circuit(&mut rng, 3, 20);
            let mut sv = Statevector::zero(3).unwrap();
            for g in &circuit.gates {
                sv.apply_gate(g);
            }
            let expected = DensityMatrix::from_statevector(&sv);
            let got = run_density(&circuit, &noiseless()).unwrap();
            let worst = expected
                .rho
                .iter()
                .zip(&got.rho)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-10, "noiseless run drifted from pure evolution");
        }
    }

    #[test]
    fn channels_match_their_kraus_form() {
        let mut rng = crate::rng::derive_rng(47, "kraus-oracle", &[]);
        for trial in 0..50 {
            let channel = if trial % 2 == 0 {
                Channel::depolarizing_1q(rng.gen::<f64>()).unwrap()
            } else {
                Channel::thermal(rng.gen::<f64>() * 50.0, 270.0, 143.0).unwrap()
            };
            let base = random_density(&mut rng, 2);
            let q = trial % 2;

            let mut direct = base.clone();
            direct.apply_channel(&channel, &[q]);

            let kraus = channel.kraus1().unwrap();
            let mut summed = vec![ZERO; base.rho.len()];
            for k in &kraus {
                let mut term = base.clone();
                term.conjugate_1q(k, q);
                for (acc, v) in summed.iter_mut().zip(&term.rho) {
                    *acc += v;
                }
            }
            let worst = direct
                .rho
                .iter()
                .zip(&summed)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            assert!(
                worst < 1e-12,
                "trial {trial}: direct channel update disagrees with Kraus sum by {worst}"
            );
        }
    }

    #[test]
    fn joint_depolarizing_mixes_the_pair() {
        let mut rng = crate::rng::derive_rng(53, "joint-depol", &[]);
        let base = random_density(&mut rng, 2);
        let mut fully = base.clone();
        fully.apply_channel(&Channel::joint_depolarizing_2q(1.0).unwrap(), &[0, 1]);
        // p = 1 leaves the maximally mixed state.
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { c(0.25) } else { ZERO };
                assert!((fully.rho[i * 4 + j] - expect).norm() < 1e-12);
            }
        }
        // Trace is preserved for intermediate strengths.
        let mut partial = base.clone();
        partial.apply_channel(&Channel::joint_depolarizing_2q(0.3).unwrap(), &[0, 1]);
        assert!((partial.trace() - ONE).norm() < 1e-12);
    }

    #[test]
    fn idle_qubit_relaxes_between_layers() {
        // Layer 1 holds X(1) and X(0); layer 2 holds only the second X(0),
        // so the excited qubit 1 idles there and damps exactly once.
        let mut model = NoiseModel::kingston();
        model.p_1q = 0.0;
        model.p_readout = 0.0;
        let circuit = Circuit::new(2, vec![Gate::x(1), Gate::x(0), Gate::x(0)], [1]).unwrap();
        let (layers, _) = schedule(&circuit, &model);
        assert_eq!(layers.len(), 2);
        let rho = run_density(&circuit, &model).unwrap();
        let gamma = 1.0 - (-model.dur_1q_us / model.t1_us).exp();
        let p_excited = rho.rho[2 * 4 + 2].re + rho.rho[3 * 4 + 3].re;
        assert!(
            (p_excited - (1.0 - gamma)).abs() < 1e-12,
            "one idle layer should damp the excited population once"
        );
    }

    #[test]
    fn basis_change_waits_for_the_barrier() {
        // Main gates occupy qubit 1 for two layers; the basis gate on qubit
        // 0 must not be scheduled before them.
        let circuit = Circuit::new(2, vec![Gate::sx(1), Gate::sx(1)], [0])
            .unwrap()
            .with_basis_change(vec![Gate::sx(0)])
            .unwrap();
        let (layers, gates) = schedule(&circuit, &NoiseModel::kingston());
        assert_eq!(layers.len(), 3);
        assert_eq!(layers[2].gates, vec![2]);
        assert_eq!(gates.len(), 3);
    }

    #[test]
    fn injected_gates_take_no_time() {
        let model = NoiseModel::kingston();
        let circuit = Circuit::new(
            2,
            vec![
                Gate::cz(0, 1),
                Gate::rx(0, 0.15).injected(),
                Gate::rx(1, 0.15).injected(),
            ],
            [0],
        )
        .unwrap();
        let (layers, _) = schedule(&circuit, &model);
        let total: f64 = layers.iter().map(|l| l.duration_us).sum();
        assert_eq!(total, model.dur_2q_us);
    }

    #[test]
    fn exact_expectation_of_known_rotations() {
        // RY(theta) on the measured qubit: <Z> = cos(theta).
        for theta in [0.0, 0.4, 1.3, 2.9] {
            let circuit = Circuit::new(1, ry_gates(theta, 0), [0]).unwrap();
            let got = exact_expectation(&circuit).unwrap();
            assert!(
                (got - theta.cos()).abs() < 1e-11,
                "theta = {theta}: expected cos(theta), got {got}"
            );
        }
    }

    #[test]
    fn exact_expectation_ignores_injected_gates() {
        let circuit = Circuit::new(2, vec![Gate::cz(0, 1)], [0]).unwrap();
        let injected = crate::noise::inject_coherent(&circuit, 0.7);
        assert_eq!(exact_expectation(&injected).unwrap(), 1.0);
    }

    #[test]
    fn basis_change_rotates_the_observable() {
        // Prepare |+> via decomposed Hadamard; plain <Z> is 0, while the
        // X-basis change makes the measured value 1.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = [[c(s), c(s)], [c(s), c(-s)]];
        let prep = decompose_one_qubit(&h, 0).unwrap();
        let plain = Circuit::new(1, prep.clone(), [0]).unwrap();
        assert!(exact_expectation(&plain).unwrap().abs() < 1e-12);
        let rotated = plain
            .with_basis_change(crate::circuit::pauli_basis_change(crate::circuit::Pauli::X, 0).unwrap())
            .unwrap();
        assert!((exact_expectation(&rotated).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn inverse_circuit_cancels_to_identity() {
        let mut rng = crate::rng::derive_rng(59, "inverse-unitary", &[]);
        for _ in 0..20 {
            let circuit = crate::circuit::tests::random_circuit(&mut rng, 3, 15);
            let mut combined = circuit.clone();
            combined.gates.extend(circuit.invert().gates);
            let u = circuit_unitary(&combined).unwrap();
            let dim = 8;
            let mut worst = 0.0f64;
            // Compare to the identity up to the global phase of u[0][0].
            let phase = u[0];
            for i in 0..dim {
                for j in 0..dim {
                    let expect = if i == j { phase } else { ZERO };
                    worst = worst.max((u[i * dim + j] - expect).norm());
                }
            }
            assert!(worst < 1e-9, "circuit times its inverse drifted: {worst}");
        }
    }

    #[test]
    fn ansatz_with_zero_rotations_is_cz_chain() {
        let circuit = build_efficient_su2(2, 1, &[0.0; 8]).unwrap();
        let u = circuit_unitary(&circuit).unwrap();
        let mut worst = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let expect = match (i, j) {
                    (3, 3) => c(-1.0),
                    _ if i == j => ONE,
                    _ => ZERO,
                };
                worst = worst.max((u[i * 4 + j] - expect).norm());
            }
        }
        assert!(worst < 1e-12, "zero-angle ansatz should reduce to one CZ");
    }

    #[test]
    fn readout_error_scales_the_expectation() {
        let mut model = NoiseModel::kingston();
        model.p_1q = 0.0;
        model.p_2q = 0.0;
        model.t1_us = 1e12;
        model.t2_us = 1e12;
        model.p_readout = 0.1;
        let circuit = Circuit::new(1, ry_gates(0.9, 0), [0]).unwrap();
        let got = exact_noisy_expectation(&circuit, &model).unwrap();
        assert!(
            (got - 0.8 * 0.9f64.cos()).abs() < 1e-9,
            "readout flips shrink <Z> by 1 - 2p"
        );
    }

    #[test]
    fn simulator_rejects_oversized_registers() {
        let gates = vec![Gate::x(10)];
        let circuit = Circuit::new(11, gates, [0]).unwrap();
        assert!(matches!(
            run_density(&circuit, &NoiseModel::kingston()),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn sampling_mean_tracks_exact_noisy_expectation() {
        let circuit = Circuit::new(1, ry_gates(1.1, 0), [0]).unwrap();
        let model = NoiseModel::kingston();
        let exact = exact_noisy_expectation(&circuit, &model).unwrap();
        let shots = 1_000_000;
        let data = sample(&circuit, &model, shots, false, 7).unwrap();
        let mean = data.signed_mean(0).unwrap();
        let sigma = ((1.0 - exact * exact) / shots as f64).sqrt();
        assert!(
            (mean - exact).abs() < 5.0 * sigma,
            "sampled mean {mean} strays from exact {exact} (sigma {sigma})"
        );
    }

    #[test]
    fn twirled_sampling_is_unbiased_and_marks_masks() {
        let circuit = Circuit::new(1, ry_gates(0.6, 0), [0]).unwrap();
        let model = NoiseModel::kingston();
        let exact = exact_noisy_expectation(&circuit, &model).unwrap();
        let shots = 1_000_000;
        let data = sample(&circuit, &model, shots, true, 11).unwrap();
        assert!(data.twirled);
        assert_eq!(data.counts.len(), 4);
        let masked: u64 = data.counts[2] + data.counts[3];
        assert!(
            masked > shots / 3 && masked < 2 * shots / 3,
            "twirl masks should be drawn uniformly"
        );
        let mean = data.signed_mean(0).unwrap();
        let sigma = (1.0 / shots as f64).sqrt();
        assert!((mean - exact).abs() < 5.0 * sigma);
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let circuit = Circuit::new(2, vec![Gate::sx(0), Gate::cz(0, 1)], [0, 1]).unwrap();
        let model = NoiseModel::kingston();
        let a = sample(&circuit, &model, 2_500_000, true, 99).unwrap();
        let b = sample(&circuit, &model, 2_500_000, true, 99).unwrap();
        assert_eq!(a.counts, b.counts);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample(&circuit, &model, 2_500_000, true, 99).unwrap());
        assert_eq!(a.counts, single.counts, "counts must not depend on threads");
        let other = sample(&circuit, &model, 2_500_000, true, 100).unwrap();
        assert_ne!(a.counts, other.counts, "different seeds should differ");
    }

    #[test]
    fn signed_mean_requires_a_measured_qubit() {
        let circuit = Circuit::new(2, vec![Gate::x(0)], [0]).unwrap();
        let data = sample(&circuit, &NoiseModel::kingston(), 1000, false, 1).unwrap();
        assert!(data.signed_mean(1).is_err());
        assert!(data.signed_mean(0).is_ok());
    }
}
