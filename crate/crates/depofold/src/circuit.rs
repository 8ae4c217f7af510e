//! Circuit representation in the hardware basis, plus the structural
//! transformations the mitigation methods are built from.
//!
//! The gate set is `{RX, RZ, RZZ, SX, SXdg, X, CZ}`. `SXdg` is carried as a
//! first-class gate so that every basis gate has an inverse that is again a
//! single basis gate with the same error footprint. Angles are radians and
//! are stored exactly as given (no modular reduction).
//!
//! Qubit index convention: basis state `i` assigns qubit `q` the bit
//! `(i >> q) & 1`. For two-qubit gate matrices, `qubits[0]` is the high bit
//! of the local two-bit index (consistent with [`crate::mat::kron2`]).

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{c, ci, is_unitary2, Mat2, Mat4, ONE, ZERO};

/// Absolute tolerance under which an angle counts as a multiple of `2*pi`
/// and the corresponding rotation gate is elided.
const ANGLE_ELISION_TOL: f64 = 1e-12;

/// Unitarity tolerance accepted by [`decompose_one_qubit`].
const UNITARITY_TOL: f64 = 1e-10;

/// The gate kinds supported by the simulator and the transpiled circuits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    #[serde(rename = "RX")]
    Rx,
    #[serde(rename = "RZ")]
    Rz,
    #[serde(rename = "RZZ")]
    Rzz,
    #[serde(rename = "SX")]
    Sx,
    #[serde(rename = "SXdg")]
    Sxdg,
    #[serde(rename = "X")]
    X,
    #[serde(rename = "CZ")]
    Cz,
}

impl GateKind {
    /// Number of qubits the gate acts on.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rzz | GateKind::Cz => 2,
            _ => 1,
        }
    }

    /// Whether the gate carries a rotation angle.
    pub fn parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Rz | GateKind::Rzz)
    }
}

/// One gate instance in a circuit.
///
/// `injected` marks coherent-error gates inserted by
/// [`crate::noise::inject_coherent`]; they are applied by the simulator but
/// are invisible to gate classification, folding bookkeeping, gate counts
/// and scheduling (they occupy zero time and carry no incoherent error).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GateRepr", into = "GateRepr")]
pub struct Gate {
    pub kind: GateKind,
    qubits: [usize; 2],
    pub angle: Option<f64>,
    pub injected: bool,
}

/// Wire format of a gate: `{"kind": "RX", "qubits": [0], "angle": 0.25}`.
#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: GateKind,
    qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    injected: bool,
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> Self {
        GateRepr {
            kind: g.kind,
            qubits: g.qubits().to_vec(),
            angle: g.angle,
            injected: g.injected,
        }
    }
}

impl TryFrom<GateRepr> for Gate {
    type Error = Error;

    fn try_from(r: GateRepr) -> Result<Gate> {
        if r.qubits.len() != r.kind.arity() {
            return Err(Error::InvalidArgument(format!(
                "{:?} acts on {} qubit(s), got {:?}",
                r.kind,
                r.kind.arity(),
                r.qubits
            )));
        }
        let qubits = match *r.qubits.as_slice() {
            [q] => [q, usize::MAX],
            [a, b] => [a, b],
            _ => unreachable!(),
        };
        let gate = Gate {
            kind: r.kind,
            qubits,
            angle: r.angle,
            injected: r.injected,
        };
        gate.validate_shape()?;
        Ok(gate)
    }
}

impl Gate {
    fn one(kind: GateKind, q: usize, angle: Option<f64>) -> Gate {
        Gate {
            kind,
            qubits: [q, usize::MAX],
            angle,
            injected: false,
        }
    }

    pub fn rx(q: usize, angle: f64) -> Gate {
        Gate::one(GateKind::Rx, q, Some(angle))
    }

    pub fn rz(q: usize, angle: f64) -> Gate {
        Gate::one(GateKind::Rz, q, Some(angle))
    }

    pub fn sx(q: usize) -> Gate {
        Gate::one(GateKind::Sx, q, None)
    }

    pub fn sxdg(q: usize) -> Gate {
        Gate::one(GateKind::Sxdg, q, None)
    }

    pub fn x(q: usize) -> Gate {
        Gate::one(GateKind::X, q, None)
    }

    pub fn cz(a: usize, b: usize) -> Gate {
        Gate {
            kind: GateKind::Cz,
            qubits: [a, b],
            angle: None,
            injected: false,
        }
    }

    pub fn rzz(a: usize, b: usize, angle: f64) -> Gate {
        Gate {
            kind: GateKind::Rzz,
            qubits: [a, b],
            angle: Some(angle),
            injected: false,
        }
    }

    /// Marks the gate as an injected coherent-error gate.
    pub fn injected(mut self) -> Gate {
        self.injected = true;
        self
    }

    /// The qubits the gate acts on (length equals the kind's arity).
    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    /// Internal consistency: arity-correct qubits, angle present exactly for
    /// parameterized kinds, finite angle, distinct qubits.
    fn validate_shape(&self) -> Result<()> {
        match (self.kind.parameterized(), self.angle) {
            (true, None) => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} requires an angle",
                    self.kind
                )))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidArgument(format!(
                    "{:?} does not take an angle",
                    self.kind
                )))
            }
            (true, Some(a)) if !a.is_finite() => {
                return Err(Error::InvalidArgument(format!(
                    "non-finite angle on {:?}",
                    self.kind
                )))
            }
            _ => {}
        }
        if self.is_two_qubit() && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidArgument(format!(
                "{:?} needs two distinct qubits, got {}",
                self.kind, self.qubits[0]
            )));
        }
        Ok(())
    }

    /// Validates the gate against a register of `n_qubits` qubits.
    pub fn validate_in(&self, n_qubits: usize) -> Result<()> {
        self.validate_shape()?;
        for &q in self.qubits() {
            if q >= n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "qubit {q} out of range for {n_qubits}-qubit register"
                )));
            }
        }
        Ok(())
    }

    /// The single-gate inverse. Rotations negate their angle, `SX` and
    /// `SXdg` swap, `X` and `CZ` are involutions.
    pub fn inverse(&self) -> Gate {
        let mut inv = self.clone();
        match self.kind {
            GateKind::Rx | GateKind::Rz | GateKind::Rzz => {
                inv.angle = self.angle.map(|a| -a);
            }
            GateKind::Sx => inv.kind = GateKind::Sxdg,
            GateKind::Sxdg => inv.kind = GateKind::Sx,
            GateKind::X | GateKind::Cz => {}
        }
        inv
    }

    /// The `2x2` matrix of a one-qubit gate.
    pub fn matrix1(&self) -> Option<Mat2> {
        let m = match self.kind {
            GateKind::Rx => {
                let h = self.angle.unwrap() / 2.0;
                [
                    [c(h.cos()), ci(0.0, -h.sin())],
                    [ci(0.0, -h.sin()), c(h.cos())],
                ]
            }
            GateKind::Rz => {
                let h = self.angle.unwrap() / 2.0;
                [
                    [ci(h.cos(), -h.sin()), ZERO],
                    [ZERO, ci(h.cos(), h.sin())],
                ]
            }
            GateKind::Sx => [
                [ci(0.5, 0.5), ci(0.5, -0.5)],
                [ci(0.5, -0.5), ci(0.5, 0.5)],
            ],
            GateKind::Sxdg => [
                [ci(0.5, -0.5), ci(0.5, 0.5)],
                [ci(0.5, 0.5), ci(0.5, -0.5)],
            ],
            GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
            GateKind::Rzz | GateKind::Cz => return None,
        };
        Some(m)
    }

    /// The `4x4` matrix of a two-qubit gate; `qubits()[0]` is the high bit.
    pub fn matrix2(&self) -> Option<Mat4> {
        let mut m = [[ZERO; 4]; 4];
        match self.kind {
            GateKind::Cz => {
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] = if i == 3 { c(-1.0) } else { ONE };
                }
            }
            GateKind::Rzz => {
                let h = self.angle.unwrap() / 2.0;
                let minus = ci(h.cos(), -h.sin());
                let plus = ci(h.cos(), h.sin());
                // Z(x)Z eigenvalue +1 on |00>,|11> and -1 on |01>,|10>.
                m[0][0] = minus;
                m[1][1] = plus;
                m[2][2] = plus;
                m[3][3] = minus;
            }
            _ => return None,
        }
        Some(m)
    }
}

/// A circuit over `n_qubits` qubits with a non-empty set of measured qubits
/// and an optional pre-measurement basis change.
///
/// `basis_change` gates run after `gates` and before measurement. They are
/// ordinary noisy one-qubit gates in simulation, but structural operations
/// (classification, folding, inversion) treat them as part of the observable
/// and leave them alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    pub measured: BTreeSet<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub basis_change: Vec<Gate>,
}

impl Circuit {
    /// Builds and validates a circuit measuring the given qubits.
    pub fn new(
        n_qubits: usize,
        gates: Vec<Gate>,
        measured: impl IntoIterator<Item = usize>,
    ) -> Result<Circuit> {
        let circuit = Circuit {
            n_qubits,
            gates,
            measured: measured.into_iter().collect(),
            basis_change: Vec::new(),
        };
        circuit.validate()?;
        Ok(circuit)
    }

    /// Replaces the measured set (e.g. to point an ansatz at an observable).
    pub fn with_measured(mut self, measured: impl IntoIterator<Item = usize>) -> Result<Circuit> {
        self.measured = measured.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    /// Attaches pre-measurement basis-change gates.
    pub fn with_basis_change(mut self, gates: Vec<Gate>) -> Result<Circuit> {
        self.basis_change = gates;
        self.validate()?;
        Ok(self)
    }

    /// Full structural validation; also used after deserializing.
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one qubit".into()));
        }
        if self.measured.is_empty() {
            return Err(Error::InvalidArgument(
                "circuit needs at least one measured qubit".into(),
            ));
        }
        for &q in &self.measured {
            if q >= self.n_qubits {
                return Err(Error::InvalidArgument(format!(
                    "measured qubit {q} out of range for {} qubits",
                    self.n_qubits
                )));
            }
        }
        for g in &self.gates {
            g.validate_in(self.n_qubits)?;
        }
        for g in &self.basis_change {
            g.validate_in(self.n_qubits)?;
            if g.is_two_qubit() {
                return Err(Error::InvalidArgument(
                    "basis-change gates must be one-qubit gates".into(),
                ));
            }
            if !self.measured.contains(&g.qubits()[0]) {
                return Err(Error::InvalidArgument(format!(
                    "basis-change gate on unmeasured qubit {}",
                    g.qubits()[0]
                )));
            }
        }
        Ok(())
    }

    /// Number of one-qubit gates, not counting injected coherent gates or
    /// basis-change gates.
    pub fn one_qubit_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| !g.injected && !g.is_two_qubit())
            .count()
    }

    /// Number of two-qubit gates, not counting injected coherent gates.
    pub fn two_qubit_gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| !g.injected && g.is_two_qubit())
            .count()
    }

    /// The circuit running the main gate list backwards with every gate
    /// inverted. Measured set and basis change carry over unchanged; the
    /// identity guarantee (`self` then `invert(self)` composes to the
    /// identity) covers the main gate list only.
    pub fn invert(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: invert_gates(&self.gates),
            measured: self.measured.clone(),
            basis_change: self.basis_change.clone(),
        }
    }

    /// Unitary folding for zero-noise extrapolation: the circuit followed by
    /// `(factor - 1) / 2` rounds of (inverse, forward), so the net unitary is
    /// unchanged while the gate count scales by `factor`. `factor` must be
    /// odd and positive. Basis-change gates are not folded.
    pub fn fold(&self, factor: usize) -> Result<Circuit> {
        if factor == 0 || factor.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "fold factor must be odd and positive, got {factor}"
            )));
        }
        let mut gates = self.gates.clone();
        let inverse = invert_gates(&self.gates);
        for _ in 0..(factor - 1) / 2 {
            gates.extend(inverse.iter().cloned());
            gates.extend(self.gates.iter().cloned());
        }
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            measured: self.measured.clone(),
            basis_change: self.basis_change.clone(),
        })
    }

    /// Serializes to the JSON interchange format. Angles round-trip
    /// bit-exactly (shortest-representation float encoding).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    /// Parses and validates a circuit from the JSON interchange format.
    pub fn from_json(text: &str) -> Result<Circuit> {
        let circuit: Circuit = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("circuit JSON: {e}")))?;
        circuit.validate()?;
        Ok(circuit)
    }

    /// Classifies the main gates for estimation-circuit generation; see
    /// [`GateClassification`]. Injected coherent gates are invisible here.
    ///
    /// The sweep walks backwards from the measured qubits. A gate is in the
    /// observable's cone if it touches a relevant qubit; two-qubit gates in
    /// the cone make both their qubits relevant. An in-cone two-qubit gate
    /// whose unmeasured qubit is never touched by a later in-cone gate
    /// straddles the cone boundary and goes into the companion list.
    pub fn classify_gates(&self) -> GateClassification {
        let mut relevant: u128 = self.measured.iter().fold(0, |m, &q| m | (1 << q));
        let mut in_cone = vec![false; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate().rev() {
            if g.injected {
                continue;
            }
            let mask: u128 = g.qubits().iter().fold(0, |m, &q| m | (1 << q));
            if relevant & mask != 0 {
                in_cone[i] = true;
                if g.is_two_qubit() {
                    relevant |= mask;
                }
            }
        }

        // Last in-cone touch per qubit, for the companion test.
        let mut last_touch = vec![usize::MAX; self.n_qubits];
        for (i, g) in self.gates.iter().enumerate() {
            if in_cone[i] {
                for &q in g.qubits() {
                    last_touch[q] = i;
                }
            }
        }

        let mut out = GateClassification::default();
        for (i, g) in self.gates.iter().enumerate() {
            if g.injected {
                continue;
            }
            if !in_cone[i] {
                out.excluded.push(i);
            } else if g.is_two_qubit() {
                let terminal = g
                    .qubits()
                    .iter()
                    .filter(|&&q| !self.measured.contains(&q) && last_touch[q] == i)
                    .count();
                if terminal == 1 {
                    out.companion.push(i);
                } else {
                    out.pool_2q.push(i);
                }
            } else {
                out.pool_1q.push(i);
            }
        }
        out
    }

    /// A hash of the gate structure (kinds and wires, not rotation angles)
    /// together with the measured set. Circuits sharing this key form a
    /// class that can reuse one set of estimation circuits.
    pub fn structure_key(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        self.n_qubits.hash(&mut h);
        for g in &self.gates {
            if g.injected {
                continue;
            }
            g.kind.hash(&mut h);
            g.qubits().hash(&mut h);
        }
        for &q in &self.measured {
            q.hash(&mut h);
        }
        h.finish()
    }
}

fn invert_gates(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().map(Gate::inverse).collect()
}

/// Partition of a circuit's gate indices produced by
/// [`Circuit::classify_gates`]. Index lists are in original circuit order.
///
/// * `pool_1q` / `pool_2q`: gates eligible for random selection,
/// * `companion`: in-cone two-qubit gates with one terminal qubit; these are
///   replayed verbatim at the end of estimation circuits,
/// * `excluded`: gates outside the measured observable's backward cone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateClassification {
    pub pool_1q: Vec<usize>,
    pub pool_2q: Vec<usize>,
    pub companion: Vec<usize>,
    pub excluded: Vec<usize>,
}

impl GateClassification {
    pub fn pool_size(&self) -> usize {
        self.pool_1q.len() + self.pool_2q.len()
    }
}

/// Weight-one Pauli labels for observables and twirling frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        crate::mat::pauli_mat(self as usize)
    }
}

impl std::fmt::Display for Pauli {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

fn angle_is_trivial(angle: f64) -> bool {
    let reduced = angle.rem_euclid(2.0 * PI);
    reduced.abs() < ANGLE_ELISION_TOL || (2.0 * PI - reduced).abs() < ANGLE_ELISION_TOL
}

/// Decomposes an arbitrary one-qubit unitary into at most five gates from
/// `{RZ, SX}` acting on `qubit`, equal to `u` up to global phase.
///
/// Uses the ZYZ Euler angles `u ~ RZ(phi) RY(theta) RZ(lambda)` and the
/// identity `RZ(phi) RY(theta) RZ(lambda) ~ RZ(phi+pi) SX RZ(theta+pi) SX
/// RZ(lambda)`. Rotations that reduce to the identity (angle a multiple of
/// `2*pi`) are elided, so the identity input yields an empty sequence and
/// diagonal inputs yield a single `RZ`.
pub fn decompose_one_qubit(u: &Mat2, qubit: usize) -> Result<Vec<Gate>> {
    if !is_unitary2(u, UNITARITY_TOL) {
        return Err(Error::InvalidArgument(
            "decompose_one_qubit requires a unitary matrix".into(),
        ));
    }
    // Normalize to SU(2); either square root works, the result only moves by
    // a global sign.
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let scale = det.sqrt();
    let su = [
        [u[0][0] / scale, u[0][1] / scale],
        [u[1][0] / scale, u[1][1] / scale],
    ];

    let sin_half = su[1][0].norm();
    let cos_half = su[0][0].norm();
    if sin_half < 1e-13 {
        // Diagonal up to tolerance: a pure RZ (or nothing).
        let angle = 2.0 * su[1][1].arg();
        if angle_is_trivial(angle) {
            return Ok(Vec::new());
        }
        return Ok(vec![Gate::rz(qubit, angle)]);
    }
    let theta = 2.0 * sin_half.atan2(cos_half);
    let diff = 2.0 * su[1][0].arg();
    let sum = if cos_half < 1e-13 {
        // At theta = pi the unitary depends only on phi - lambda.
        0.0
    } else {
        2.0 * su[1][1].arg()
    };
    let phi = (sum + diff) / 2.0;
    let lambda = (sum - diff) / 2.0;

    let mut gates = Vec::with_capacity(5);
    let push_rz = |gates: &mut Vec<Gate>, angle: f64| {
        if !angle_is_trivial(angle) {
            gates.push(Gate::rz(qubit, angle));
        }
    };
    push_rz(&mut gates, lambda);
    gates.push(Gate::sx(qubit));
    push_rz(&mut gates, theta + PI);
    gates.push(Gate::sx(qubit));
    push_rz(&mut gates, phi + PI);
    Ok(gates)
}

/// The matrix of `RY(theta)`.
pub fn ry_matrix(theta: f64) -> Mat2 {
    let h = theta / 2.0;
    [[c(h.cos()), c(-h.sin())], [c(h.sin()), c(h.cos())]]
}

/// `RY(theta)` on `qubit`, emitted through the basis decomposition.
pub fn ry_gates(theta: f64, qubit: usize) -> Vec<Gate> {
    decompose_one_qubit(&ry_matrix(theta), qubit).expect("RY is unitary")
}

/// Pre-measurement gates `g` with `g P g' = Z` up to phase, so that
/// measuring `Z` after `g` measures the Pauli `P`. `Z` needs no gates;
/// the identity is not a measurable Pauli label.
pub fn pauli_basis_change(pauli: Pauli, qubit: usize) -> Result<Vec<Gate>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match pauli {
        Pauli::Z => Ok(Vec::new()),
        Pauli::X => {
            let hadamard = [[c(s), c(s)], [c(s), c(-s)]];
            decompose_one_qubit(&hadamard, qubit)
        }
        Pauli::Y => {
            // H * Sdg maps Y to Z under conjugation.
            let m = [[c(s), ci(0.0, -s)], [c(s), ci(0.0, s)]];
            decompose_one_qubit(&m, qubit)
        }
        Pauli::I => Err(Error::InvalidArgument(
            "identity is not a measurable Pauli".into(),
        )),
    }
}

/// Builds the hardware-efficient ansatz used by the experiment harness: per
/// layer an `RY` and an `RZ` rotation on every qubit followed by a linear
/// `CZ` chain `(q, q+1)`, plus one final rotation layer. `params` supplies
/// the rotation angles and must have length `2 * n_qubits * (layers + 1)`,
/// ordered `[ry_0..ry_n, rz_0..rz_n]` per layer. `RY` rotations are emitted
/// through the basis decomposition; exact multiples of `2*pi` are elided.
///
/// The returned circuit measures qubit 0 by default; use
/// [`Circuit::with_measured`] / [`Circuit::with_basis_change`] to point it
/// at an observable.
pub fn build_efficient_su2(n_qubits: usize, layers: usize, params: &[f64]) -> Result<Circuit> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("ansatz needs at least one qubit".into()));
    }
    let expected = 2 * n_qubits * (layers + 1);
    if params.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "ansatz over {n_qubits} qubits with {layers} layers takes {expected} parameters, got {}",
            params.len()
        )));
    }
    if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite ansatz parameter {bad}"
        )));
    }
    let mut gates = Vec::new();
    for block in 0..=layers {
        let base = block * 2 * n_qubits;
        for q in 0..n_qubits {
            gates.extend(ry_gates(params[base + q], q));
        }
        for q in 0..n_qubits {
            let angle = params[base + n_qubits + q];
            if !angle_is_trivial(angle) {
                gates.push(Gate::rz(q, angle));
            }
        }
        if block < layers {
            for q in 0..n_qubits - 1 {
                gates.push(Gate::cz(q, q + 1));
            }
        }
    }
    Circuit::new(n_qubits, gates, [0])
}

/// Number of rotation parameters [`build_efficient_su2`] expects.
pub fn efficient_su2_param_count(n_qubits: usize, layers: usize) -> usize {
    2 * n_qubits * (layers + 1)
}
