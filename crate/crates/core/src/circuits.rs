//! Gate catalog, circuit execution on state vectors and density matrices,
//! the Werner-state preparation circuit, and random circuit generation.
//!
//! A gate acting on wires `[w0, w1, ...]` is described by a local matrix in
//! which `w0` is the least significant bit, matching the register's
//! little-endian convention. Controlled gates list the control(s) first, so
//! `CX` on `[c, t]` is the permutation swapping local indices 1 and 3, and
//! `TOFFOLI` on `[c0, c1, t]` swaps local indices 3 and 7.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::stream_rng;
use crate::linalg::{ComplexMatrix, ONE, ZERO};
use crate::states::{DensityMatrix, StateVector, WernerParams};

/// Largest register `circuit_unitary` will build a dense matrix for.
pub const MAX_UNITARY_QUBITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("wire {wire} out of range for {num_qubits} qubits")]
    WireOutOfRange { wire: usize, num_qubits: usize },
    #[error("gate {0} lists a wire more than once")]
    DuplicateWire(String),
    #[error("gate {kind} expects {expected} wires, got {got}")]
    Arity {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("gate {kind} expects {expected} parameters, got {got}")]
    ParamCount {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("controlled gate base must be a one-qubit unitary, got {0}")]
    BadControlledBase(String),
    #[error("unknown gate kind {0:?}")]
    UnknownGate(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed circuit JSON on line {line}: {message}")]
    Json { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    RX,
    RY,
    RZ,
    U1,
    U2,
    U3,
    CX,
    CZ,
    SWAP,
    TOFFOLI,
    /// Single-control version of a one-qubit gate; wires `[control, target]`.
    Controlled(Box<GateKind>),
    /// Circuit furniture; identity on the state.
    Barrier,
    /// Marks a terminal measurement; identity for unitary evolution.
    Measure,
}

/// One-qubit kinds, in catalog order.
pub const SINGLE_QUBIT_KINDS: [GateKind; 15] = [
    GateKind::I,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::S,
    GateKind::Sdg,
    GateKind::T,
    GateKind::Tdg,
    GateKind::RX,
    GateKind::RY,
    GateKind::RZ,
    GateKind::U1,
    GateKind::U2,
    GateKind::U3,
];

impl GateKind {
    /// Required wire count; `None` for `Barrier`, which takes any nonzero number.
    pub fn arity(&self) -> Option<usize> {
        use GateKind::*;
        match self {
            CX | CZ | SWAP | Controlled(_) => Some(2),
            TOFFOLI => Some(3),
            Barrier => None,
            _ => Some(1),
        }
    }

    pub fn param_count(&self) -> usize {
        use GateKind::*;
        match self {
            RX | RY | RZ | U1 => 1,
            U2 => 2,
            U3 => 3,
            Controlled(base) => base.param_count(),
            _ => 0,
        }
    }

    pub fn is_unitary_op(&self) -> bool {
        !matches!(self, GateKind::Barrier | GateKind::Measure)
    }

    fn name(&self) -> String {
        use GateKind::*;
        match self {
            I => "I".into(),
            X => "X".into(),
            Y => "Y".into(),
            Z => "Z".into(),
            H => "H".into(),
            S => "S".into(),
            Sdg => "SDG".into(),
            T => "T".into(),
            Tdg => "TDG".into(),
            RX => "RX".into(),
            RY => "RY".into(),
            RZ => "RZ".into(),
            U1 => "U1".into(),
            U2 => "U2".into(),
            U3 => "U3".into(),
            CX => "CX".into(),
            CZ => "CZ".into(),
            SWAP => "SWAP".into(),
            TOFFOLI => "TOFFOLI".into(),
            Controlled(base) => format!("CONTROLLED({})", base.name()),
            Barrier => "BARRIER".into(),
            Measure => "MEASURE".into(),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for GateKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use GateKind::*;
        let upper = s.trim().to_ascii_uppercase();
        if let Some(inner) = upper
            .strip_prefix("CONTROLLED(")
            .and_then(|r| r.strip_suffix(')'))
        {
            let base: GateKind = inner.parse()?;
            if base.arity() != Some(1) || !base.is_unitary_op() {
                return Err(CircuitError::BadControlledBase(base.name()));
            }
            return Ok(Controlled(Box::new(base)));
        }
        Ok(match upper.as_str() {
            "I" | "ID" => I,
            "X" => X,
            "Y" => Y,
            "Z" => Z,
            "H" => H,
            "S" => S,
            "SDG" => Sdg,
            "T" => T,
            "TDG" => Tdg,
            "RX" => RX,
            "RY" => RY,
            "RZ" => RZ,
            "U1" => U1,
            "U2" => U2,
            "U3" => U3,
            "CX" | "CNOT" => CX,
            "CZ" => CZ,
            "SWAP" => SWAP,
            "TOFFOLI" | "CCX" => TOFFOLI,
            "BARRIER" => Barrier,
            "MEASURE" => Measure,
            _ => return Err(CircuitError::UnknownGate(s.to_string())),
        })
    }
}

impl TryFrom<String> for GateKind {
    type Error = CircuitError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<GateKind> for String {
    fn from(k: GateKind) -> String {
        k.name()
    }
}

/// A gate application: kind, angles in radians, and wires (controls first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    #[serde(default)]
    pub params: Vec<f64>,
    pub wires: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, params: Vec<f64>, wires: Vec<usize>) -> Result<Self, CircuitError> {
        let g = Self {
            kind,
            params,
            wires,
        };
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<(), CircuitError> {
        let name = self.kind.name();
        if let GateKind::Controlled(base) = &self.kind {
            if base.arity() != Some(1) || !base.is_unitary_op() {
                return Err(CircuitError::BadControlledBase(base.name()));
            }
        }
        match self.kind.arity() {
            Some(expected) if expected != self.wires.len() => {
                return Err(CircuitError::Arity {
                    kind: name,
                    expected,
                    got: self.wires.len(),
                })
            }
            None if self.wires.is_empty() => {
                return Err(CircuitError::Arity {
                    kind: name,
                    expected: 1,
                    got: 0,
                })
            }
            _ => {}
        }
        if self.params.len() != self.kind.param_count() {
            return Err(CircuitError::ParamCount {
                kind: name,
                expected: self.kind.param_count(),
                got: self.params.len(),
            });
        }
        for (i, w) in self.wires.iter().enumerate() {
            if self.wires[..i].contains(w) {
                return Err(CircuitError::DuplicateWire(name));
            }
        }
        Ok(())
    }

    pub fn single(kind: GateKind, wire: usize) -> Self {
        Self::new(kind, vec![], vec![wire]).expect("parameterless one-qubit gate")
    }

    pub fn h(q: usize) -> Self {
        Self::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Self::single(GateKind::X, q)
    }

    pub fn u3(theta: f64, lambda: f64, phi: f64, q: usize) -> Self {
        Self::new(GateKind::U3, vec![theta, lambda, phi], vec![q]).expect("valid U3")
    }

    pub fn cx(control: usize, target: usize) -> Result<Self, CircuitError> {
        Self::new(GateKind::CX, vec![], vec![control, target])
    }

    pub fn cz(control: usize, target: usize) -> Result<Self, CircuitError> {
        Self::new(GateKind::CZ, vec![], vec![control, target])
    }

    pub fn matrix(&self) -> ComplexMatrix {
        gate_matrix(self)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m2(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![a, b], vec![cc, d]]).expect("2x2")
}

fn single_qubit_matrix(kind: &GateKind, p: &[f64]) -> ComplexMatrix {
    use GateKind::*;
    let s = FRAC_1_SQRT_2;
    match kind {
        I | Barrier | Measure => ComplexMatrix::identity(2),
        X => m2(ZERO, ONE, ONE, ZERO),
        Y => m2(ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO),
        Z => m2(ONE, ZERO, ZERO, -ONE),
        H => m2(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)),
        S => m2(ONE, ZERO, ZERO, c(0.0, 1.0)),
        Sdg => m2(ONE, ZERO, ZERO, c(0.0, -1.0)),
        T => m2(ONE, ZERO, ZERO, c(s, s)),
        Tdg => m2(ONE, ZERO, ZERO, c(s, -s)),
        RX => {
            let (ct, st) = ((p[0] / 2.0).cos(), (p[0] / 2.0).sin());
            m2(c(ct, 0.0), c(0.0, -st), c(0.0, -st), c(ct, 0.0))
        }
        RY => {
            let (ct, st) = ((p[0] / 2.0).cos(), (p[0] / 2.0).sin());
            m2(c(ct, 0.0), c(-st, 0.0), c(st, 0.0), c(ct, 0.0))
        }
        RZ => m2(
            Complex64::from_polar(1.0, -p[0] / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, p[0] / 2.0),
        ),
        U1 => m2(ONE, ZERO, ZERO, Complex64::from_polar(1.0, p[0])),
        // U2(λ, φ), normalized by 1/√2
        U2 => {
            let (lambda, phi) = (p[0], p[1]);
            m2(
                c(s, 0.0),
                -Complex64::from_polar(s, lambda),
                Complex64::from_polar(s, phi),
                Complex64::from_polar(s, lambda + phi),
            )
        }
        // U3(θ, λ, φ)
        U3 => {
            let (theta, lambda, phi) = (p[0], p[1], p[2]);
            let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            m2(
                c(ct, 0.0),
                -Complex64::from_polar(st, lambda),
                Complex64::from_polar(st, phi),
                Complex64::from_polar(ct, lambda + phi),
            )
        }
        _ => unreachable!("{kind} is not a one-qubit gate"),
    }
}

/// Local matrix of `g` over its own wires (`wires[0]` least significant).
pub fn gate_matrix(g: &Gate) -> ComplexMatrix {
    use GateKind::*;
    match &g.kind {
        Barrier => ComplexMatrix::identity(1 << g.wires.len()),
        CX => permutation(4, &[(1, 3)]),
        SWAP => permutation(4, &[(1, 2)]),
        TOFFOLI => permutation(8, &[(3, 7)]),
        CZ => ComplexMatrix::diagonal(&[1.0, 1.0, 1.0, -1.0]),
        Controlled(base) => {
            let u = single_qubit_matrix(base, &g.params);
            let mut m = ComplexMatrix::identity(4);
            // control set: local indices 1 (target 0) and 3 (target 1)
            for (r, lr) in [(0, 1), (1, 3)] {
                for (cc, lc) in [(0, 1), (1, 3)] {
                    m[(lr, lc)] = u[(r, cc)];
                }
            }
            m
        }
        k => single_qubit_matrix(k, &g.params),
    }
}

fn permutation(dim: usize, swaps: &[(usize, usize)]) -> ComplexMatrix {
    let mut perm: Vec<usize> = (0..dim).collect();
    for &(a, b) in swaps {
        perm.swap(a, b);
    }
    ComplexMatrix::from_fn(dim, |r, c| if perm[c] == r { ONE } else { ZERO })
}

/// Applies a local gate matrix to a full register vector in place.
fn apply_local(local: &ComplexMatrix, wires: &[usize], v: &mut [Complex64]) {
    let k = wires.len();
    let span = 1usize << k;
    let offsets: Vec<usize> = (0..span)
        .map(|l| {
            wires
                .iter()
                .enumerate()
                .filter(|(b, _)| l >> b & 1 == 1)
                .map(|(_, &w)| 1usize << w)
                .sum()
        })
        .collect();
    let mask: usize = wires.iter().map(|&w| 1usize << w).sum();
    let mut buf = vec![ZERO; span];
    for base in 0..v.len() {
        if base & mask != 0 {
            continue;
        }
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = v[base + o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            v[base + o] = local.row(r).iter().zip(&buf).map(|(a, x)| a * x).sum();
        }
    }
}

/// `U ρ U†` for one gate, in place on a full register matrix.
pub(crate) fn conjugate_by_gate(g: &Gate, rho: &mut ComplexMatrix) {
    if !g.kind.is_unitary_op() {
        return;
    }
    let local = gate_matrix(g);
    let conj_local = ComplexMatrix::from_fn(local.dim(), |r, c| local[(r, c)].conj());
    let d = rho.dim();
    let mut col = vec![ZERO; d];
    for cidx in 0..d {
        for r in 0..d {
            col[r] = rho[(r, cidx)];
        }
        apply_local(&local, &g.wires, &mut col);
        for r in 0..d {
            rho[(r, cidx)] = col[r];
        }
    }
    // (ρ U†)_{r,·} = conj(U) applied to row r
    for r in 0..d {
        let mut row = rho.row(r).to_vec();
        apply_local(&conj_local, &g.wires, &mut row);
        for (cidx, z) in row.into_iter().enumerate() {
            rho[(r, cidx)] = z;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        assert!(num_qubits >= 1, "circuit needs at least one qubit");
        Self {
            num_qubits,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(num_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Self::new(num_qubits);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self, CircuitError> {
        gate.check()?;
        if let Some(&wire) = gate.wires.iter().find(|&&w| w >= self.num_qubits) {
            return Err(CircuitError::WireOutOfRange {
                wire,
                num_qubits: self.num_qubits,
            });
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// One JSON object per line: `{"kind":"U3","params":[...],"wires":[...]}`.
    pub fn to_jsonl(&self) -> String {
        self.gates
            .iter()
            .map(|g| serde_json::to_string(g).expect("gate serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(num_qubits: usize, text: &str) -> Result<Self, CircuitError> {
        let mut c = Self::new(num_qubits);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let g: Gate = serde_json::from_str(line).map_err(|e| CircuitError::Json {
                line: i + 1,
                message: e.to_string(),
            })?;
            c.push(g)?;
        }
        Ok(c)
    }

    fn check_dim(&self, dim: usize) -> Result<(), CircuitError> {
        if dim != 1 << self.num_qubits {
            return Err(CircuitError::DimensionMismatch(format!(
                "circuit on {} qubits applied to dimension {dim}",
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn apply(&self, input: &StateVector) -> Result<StateVector, CircuitError> {
        self.check_dim(input.amplitudes().len())?;
        let mut v = input.amplitudes().to_vec();
        for g in self.gates.iter().filter(|g| g.kind.is_unitary_op()) {
            apply_local(&gate_matrix(g), &g.wires, &mut v);
        }
        Ok(StateVector::from_trusted(v))
    }

    pub fn apply_density(&self, input: &DensityMatrix) -> Result<DensityMatrix, CircuitError> {
        self.check_dim(input.dim())?;
        let mut rho = input.matrix().clone();
        for g in &self.gates {
            conjugate_by_gate(g, &mut rho);
        }
        Ok(DensityMatrix::from_trusted(rho.hermitian_part()))
    }

    pub fn unitary(&self) -> Result<ComplexMatrix, CircuitError> {
        if self.num_qubits > MAX_UNITARY_QUBITS {
            return Err(CircuitError::DimensionMismatch(format!(
                "{} qubits exceeds the dense-unitary limit of {MAX_UNITARY_QUBITS}",
                self.num_qubits
            )));
        }
        let d = 1usize << self.num_qubits;
        let mut u = ComplexMatrix::identity(d);
        let mut col = vec![ZERO; d];
        for cidx in 0..d {
            for r in 0..d {
                col[r] = u[(r, cidx)];
            }
            for g in self.gates.iter().filter(|g| g.kind.is_unitary_op()) {
                apply_local(&gate_matrix(g), &g.wires, &mut col);
            }
            for r in 0..d {
                u[(r, cidx)] = col[r];
            }
        }
        Ok(u)
    }
}

pub fn apply(c: &Circuit, input: &StateVector) -> Result<StateVector, CircuitError> {
    c.apply(input)
}

pub fn apply_density(c: &Circuit, input: &DensityMatrix) -> Result<DensityMatrix, CircuitError> {
    c.apply_density(input)
}

pub fn circuit_unitary(c: &Circuit) -> Result<ComplexMatrix, CircuitError> {
    c.unitary()
}

/// `(α, θ) = (2 arcsin √x, arccos(−w))`, with `α ∈ [0, π]`, `θ ∈ [π/2, π]`.
pub fn werner_angles(p: WernerParams) -> (f64, f64) {
    (2.0 * p.x().sqrt().asin(), (-p.w()).acos())
}

/// Two-qubit preparation circuit for the Werner family: `U3(α,0,0)` on the
/// system qubit A (qubit 1), `U3(θ,0,0)` on the ancilla B (qubit 0), then
/// `CX(B→A)` and `CZ(B→A)`.
///
/// Starting from `|00⟩` the output is
/// `(√(1−x)|0⟩+√x|1⟩)_A ⊗ cos(θ/2)|0⟩_B + (√x|0⟩−√(1−x)|1⟩)_A ⊗ sin(θ/2)|1⟩_B`. This equals `−(Z⊗Z)` applied to
/// [`crate::states::werner_purification`]; its reduced state on A is
/// `Z ρ Z` for the Werner state `ρ`, which has the same populations and
/// off-diagonal magnitudes.
pub fn werner_preparation_circuit(p: WernerParams) -> Circuit {
    let (alpha, theta) = werner_angles(p);
    let (a, b) = (1, 0);
    Circuit::from_gates(
        2,
        vec![
            Gate::u3(alpha, 0.0, 0.0, a),
            Gate::u3(theta, 0.0, 0.0, b),
            Gate::cx(b, a).expect("distinct wires"),
            Gate::cz(b, a).expect("distinct wires"),
        ],
    )
    .expect("two-qubit circuit")
}

/// An entry of the random-circuit catalog. `Controlled` stands for the
/// whole family of controlled one-qubit gates; its base is drawn uniformly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CatalogEntry {
    Fixed(usize),
    Controlled,
}

const MULTI_QUBIT_KINDS: [GateKind; 4] = [GateKind::CX, GateKind::CZ, GateKind::SWAP, GateKind::TOFFOLI];

/// Catalog entries usable on `num_qubits` qubits, each with equal weight.
pub fn catalog(num_qubits: usize) -> Vec<CatalogEntry> {
    let mut out: Vec<CatalogEntry> = (0..SINGLE_QUBIT_KINDS.len()).map(CatalogEntry::Fixed).collect();
    for (i, k) in MULTI_QUBIT_KINDS.iter().enumerate() {
        if k.arity().unwrap() <= num_qubits {
            out.push(CatalogEntry::Fixed(SINGLE_QUBIT_KINDS.len() + i));
        }
    }
    if num_qubits >= 2 {
        out.push(CatalogEntry::Controlled);
    }
    out
}

fn catalog_kind(idx: usize) -> GateKind {
    if idx < SINGLE_QUBIT_KINDS.len() {
        SINGLE_QUBIT_KINDS[idx].clone()
    } else {
        MULTI_QUBIT_KINDS[idx - SINGLE_QUBIT_KINDS.len()].clone()
    }
}

/// Random circuit: each gate picks a catalog entry uniformly, wires uniformly
/// without replacement, and every angle uniformly from `[0, 2π)`.
pub fn random_circuit(num_qubits: usize, num_gates: usize, rng_seed: u64) -> Circuit {
    let mut rng = stream_rng(rng_seed, 0xC12C);
    random_circuit_with(num_qubits, num_gates, &mut rng)
}

pub fn random_circuit_with(num_qubits: usize, num_gates: usize, rng: &mut impl Rng) -> Circuit {
    let entries = catalog(num_qubits);
    let mut circuit = Circuit::new(num_qubits);
    for _ in 0..num_gates {
        let kind = match entries[rng.random_range(0..entries.len())] {
            CatalogEntry::Fixed(i) => catalog_kind(i),
            CatalogEntry::Controlled => GateKind::Controlled(Box::new(
                SINGLE_QUBIT_KINDS[rng.random_range(0..SINGLE_QUBIT_KINDS.len())].clone(),
            )),
        };
        let arity = kind.arity().expect("catalog gates have fixed arity");
        let wires = sample(rng, num_qubits, arity).into_vec();
        let params = (0..kind.param_count())
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        circuit
            .push(Gate::new(kind, params, wires).expect("catalog gate is well formed"))
            .expect("wires drawn in range");
    }
    circuit
}

/// Human-readable description of the random-circuit parameter distribution.
pub const RANDOM_PARAM_DISTRIBUTION: &str = "angles uniform in [0, 2pi), independent per parameter";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::werner_purification;
    use std::f64::consts::PI;

    fn gate(kind: GateKind, params: &[f64], wires: &[usize]) -> Gate {
        Gate::new(kind, params.to_vec(), wires.to_vec()).unwrap()
    }

    #[test]
    fn u3_at_pi_is_minus_i_y() {
        let m = gate_matrix(&Gate::u3(PI, 0.0, 0.0, 0));
        let want = ComplexMatrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]).unwrap();
        assert!(m.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn printed_two_and_three_qubit_matrices() {
        let cz = gate_matrix(&gate(GateKind::CZ, &[], &[0, 1]));
        assert_eq!(cz, ComplexMatrix::diagonal(&[1.0, 1.0, 1.0, -1.0]));
        let cx = gate_matrix(&gate(GateKind::CX, &[], &[0, 1]));
        let want = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(cx, want);
        let swap = gate_matrix(&gate(GateKind::SWAP, &[], &[0, 1]));
        assert_eq!(swap[(1, 2)], ONE);
        assert_eq!(swap[(2, 1)], ONE);
        let tof = gate_matrix(&gate(GateKind::TOFFOLI, &[], &[0, 1, 2]));
        for r in 0..8 {
            let c = match r {
                3 => 7,
                7 => 3,
                r => r,
            };
            assert_eq!(tof[(r, c)], ONE);
        }
    }

    #[test]
    fn t_times_tdg_is_identity() {
        let t = gate_matrix(&Gate::single(GateKind::T, 0));
        let tdg = gate_matrix(&Gate::single(GateKind::Tdg, 0));
        assert!((&t * &tdg).max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn every_catalog_gate_is_unitary() {
        let mut rng = stream_rng(3, 0);
        let mut kinds: Vec<GateKind> = SINGLE_QUBIT_KINDS.to_vec();
        kinds.extend(MULTI_QUBIT_KINDS);
        kinds.extend(SINGLE_QUBIT_KINDS.iter().map(|k| GateKind::Controlled(Box::new(k.clone()))));
        for kind in kinds {
            for _ in 0..100 {
                let params: Vec<f64> = (0..kind.param_count()).map(|_| rng.random_range(0.0..TAU)).collect();
                let wires: Vec<usize> = (0..kind.arity().unwrap()).collect();
                let m = gate_matrix(&gate(kind.clone(), &params, &wires));
                assert!(m.is_unitary(1e-12), "{kind} not unitary");
            }
        }
    }

    #[test]
    fn gate_validation() {
        assert!(matches!(
            Gate::new(GateKind::CX, vec![], vec![0]),
            Err(CircuitError::Arity { .. })
        ));
        assert!(matches!(
            Gate::new(GateKind::RX, vec![], vec![0]),
            Err(CircuitError::ParamCount { .. })
        ));
        assert!(matches!(
            Gate::new(GateKind::CX, vec![], vec![1, 1]),
            Err(CircuitError::DuplicateWire(_))
        ));
        assert!(matches!(
            Gate::new(GateKind::Controlled(Box::new(GateKind::CX)), vec![], vec![0, 1]),
            Err(CircuitError::BadControlledBase(_))
        ));
        let mut c = Circuit::new(2);
        assert!(matches!(
            c.push(Gate::h(2)),
            Err(CircuitError::WireOutOfRange { wire: 2, .. })
        ));
    }

    #[test]
    fn kind_names_round_trip() {
        let kinds = [
            GateKind::Sdg,
            GateKind::TOFFOLI,
            GateKind::Controlled(Box::new(GateKind::U3)),
            GateKind::Barrier,
        ];
        for k in kinds {
            assert_eq!(k.to_string().parse::<GateKind>().unwrap(), k);
        }
        assert!("FOO".parse::<GateKind>().is_err());
    }

    #[test]
    fn empty_circuit_and_hadamard() {
        let v = StateVector::basis(1, 0);
        assert_eq!(Circuit::new(1).apply(&v).unwrap(), v);
        let mut c = Circuit::new(1);
        c.push(Gate::h(0)).unwrap();
        let out = c.apply(&v).unwrap();
        for z in out.amplitudes() {
            assert!((z - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        assert!(c.unitary().unwrap().max_abs_diff(&gate_matrix(&Gate::h(0))) < 1e-15);
    }

    #[test]
    fn apply_rejects_wrong_dimension() {
        let c = Circuit::new(2);
        assert!(matches!(
            c.apply(&StateVector::zero(1)),
            Err(CircuitError::DimensionMismatch(_))
        ));
        assert!(c.apply_density(&DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn cx_twice_is_identity_and_little_endian() {
        let c = Circuit::from_gates(2, vec![Gate::cx(0, 1).unwrap(), Gate::cx(0, 1).unwrap()]).unwrap();
        assert!(c.unitary().unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        // control qubit 0 set: |q1 q0⟩ = |01⟩ -> |11⟩
        let one = Circuit::from_gates(2, vec![Gate::cx(0, 1).unwrap()]).unwrap();
        let out = one.apply(&StateVector::basis(2, 0b01)).unwrap();
        assert_eq!(out, StateVector::basis(2, 0b11));
    }

    #[test]
    fn density_evolution_examples() {
        let mut c = Circuit::new(1);
        c.push(Gate::x(0)).unwrap();
        let out = c.apply_density(&StateVector::zero(1).to_density()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[0.0, 1.0])) < 1e-15);

        let rc = random_circuit(1, 8, 11);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert!(rc.apply_density(&mixed).unwrap().matrix().max_abs_diff(mixed.matrix()) < 1e-14);
    }

    #[test]
    fn barrier_and_measure_are_noops() {
        let v = crate::states::random_state_vector(3, 2);
        let mut c = random_circuit(3, 6, 5);
        let before = c.apply(&v).unwrap();
        c.push(Gate::new(GateKind::Barrier, vec![], vec![0, 1, 2]).unwrap()).unwrap();
        c.push(Gate::new(GateKind::Measure, vec![], vec![1]).unwrap()).unwrap();
        let after = c.apply(&v).unwrap();
        assert_eq!(before, after);
        let rho = v.to_density();
        let d1 = random_circuit(3, 6, 5).apply_density(&rho).unwrap();
        let d2 = c.apply_density(&rho).unwrap();
        assert!(d1.matrix().max_abs_diff(d2.matrix()) < 1e-15);
    }

    /// Symbolic expansion: U3(α)⊗U3(θ)|00⟩, then CX(B→A), then CZ(B→A).
    fn expanded_preparation_output(w: f64, x: f64) -> [f64; 4] {
        let (sx, sx1) = (x.sqrt(), (1.0 - x).sqrt());
        let (cb, sb) = (((1.0 - w) / 2.0).sqrt(), ((1.0 + w) / 2.0).sqrt());
        // index 2a + b
        [sx1 * cb, sx * sb, sx * cb, -sx1 * sb]
    }

    #[test]
    fn preparation_circuit_matches_symbolic_expansion() {
        for i in 0..=20 {
            for j in 0..=20 {
                let (w, x) = (i as f64 / 20.0, j as f64 / 20.0);
                let p = WernerParams::new(w, x).unwrap();
                let c = werner_preparation_circuit(p);
                let out = c.apply(&StateVector::zero(2)).unwrap();
                let want = expanded_preparation_output(w, x);
                for (z, e) in out.amplitudes().iter().zip(want) {
                    assert!((z - Complex64::new(e, 0.0)).norm() < 1e-12);
                }
                // column |00⟩ of the unitary is the same vector
                let u = c.unitary().unwrap();
                for (r, e) in want.iter().enumerate() {
                    assert!((u[(r, 0)] - Complex64::new(*e, 0.0)).norm() < 1e-12);
                }
                // and equals −(Z⊗Z) times the purification
                let psi = werner_purification(p);
                let zz = [1.0, -1.0, -1.0, 1.0];
                for ((a, b), z) in out.amplitudes().iter().zip(psi.amplitudes()).zip(zz) {
                    assert!((a + b * z).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn preparation_circuit_reduced_state_is_z_conjugated_werner() {
        let p = WernerParams::new(0.6, 0.25).unwrap();
        let rho = werner_preparation_circuit(p)
            .apply_density(&StateVector::zero(2).to_density())
            .unwrap();
        let rho_a = rho.reduce(&[1]).unwrap();
        let z = gate_matrix(&Gate::single(GateKind::Z, 0));
        let werner = crate::states::werner_state(p);
        let zrz = &(&z * werner.matrix()) * &z;
        assert!(rho_a.matrix().max_abs_diff(&zrz) < 1e-12);
        assert!((rho_a.matrix()[(0, 1)].norm() - werner.matrix()[(0, 1)].norm()).abs() < 1e-12);
    }

    #[test]
    fn random_circuit_basics() {
        assert!(random_circuit(1, 0, 3).is_empty());
        assert_eq!(random_circuit(2, 5, 7), random_circuit(2, 5, 7));
        let c = random_circuit(3, 200, 1);
        assert_eq!(c.len(), 200);
        assert!(c.gates().iter().all(|g| g.params.iter().all(|&a| (0.0..TAU).contains(&a))));
        assert!(random_circuit(2, 500, 2).gates().iter().all(|g| g.kind != GateKind::TOFFOLI));
        assert!(random_circuit(1, 200, 2).gates().iter().all(|g| g.wires.len() == 1));
    }

    #[test]
    fn random_circuit_kind_histogram_is_uniform() {
        // 20 000 circuits of 5 gates = 10⁵ draws over the 2-qubit catalog
        let entries = catalog(2);
        let mut counts = std::collections::HashMap::new();
        for seed in 0..20_000 {
            for g in random_circuit(2, 5, seed).gates() {
                let key = match &g.kind {
                    GateKind::Controlled(_) => "CONTROLLED".to_string(),
                    k => k.to_string(),
                };
                *counts.entry(key).or_insert(0usize) += 1;
            }
        }
        assert_eq!(counts.len(), entries.len());
        let total: usize = counts.values().sum();
        let expected = total as f64 / entries.len() as f64;
        let sigma = (expected * (1.0 - 1.0 / entries.len() as f64)).sqrt();
        let mut chi2 = 0.0;
        for &n in counts.values() {
            assert!((n as f64 - expected).abs() < 3.0 * sigma + 1.0, "count {n} vs {expected}");
            chi2 += (n as f64 - expected).powi(2) / expected;
        }
        // 18 degrees of freedom: 99.9th percentile ≈ 42.3
        assert!(chi2 < 42.3, "chi2 = {chi2}");
    }

    #[test]
    fn jsonl_round_trip() {
        let c = random_circuit(3, 25, 4);
        let text = c.to_jsonl();
        assert_eq!(text.lines().count(), 25);
        assert_eq!(Circuit::from_jsonl(3, &text).unwrap(), c);
        let line = r#"{"kind": "U3", "params": [1.0, 0.0, 0.0], "wires": [0]}"#;
        let parsed = Circuit::from_jsonl(1, line).unwrap();
        assert_eq!(parsed.gates()[0], Gate::u3(1.0, 0.0, 0.0, 0));
        assert!(matches!(
            Circuit::from_jsonl(1, r#"{"kind": "NOPE", "wires": [0]}"#),
            Err(CircuitError::Json { line: 1, .. })
        ));
    }
}
