//! Depolarizing noise, readout error and readout mitigation.

use serde::{Deserialize, Serialize};

use super::TomographyError;
use crate::circuits::{conjugate_by_gate, Circuit};
use crate::linalg::ComplexMatrix;
use crate::states::{DensityMatrix, StateVector};

fn check_probability(name: &str, p: f64) -> Result<(), TomographyError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TomographyError::InvalidProbability(format!("{name} = {p} outside [0, 1]")))
    }
}

/// Classical flip probabilities of one qubit's readout.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadoutError {
    /// P(read 1 | prepared 0)
    pub p0_to_1: f64,
    /// P(read 0 | prepared 1)
    pub p1_to_0: f64,
}

impl ReadoutError {
    pub fn symmetric(p: f64) -> Self {
        Self {
            p0_to_1: p,
            p1_to_0: p,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.p0_to_1 == 0.0 && self.p1_to_0 == 0.0
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Global depolarizing strength applied to the prepared state.
    #[serde(default)]
    pub depolarizing_p: f64,
    /// Per-qubit readout error. Qubit `q` uses `readout[q]`, or the last
    /// entry when `q` is past the end; empty means perfect readout.
    #[serde(default)]
    pub readout: Vec<ReadoutError>,
    /// Depolarizing kick applied on a gate's wires after every gate.
    #[serde(default)]
    pub gate_error: f64,
}

impl NoiseParams {
    pub fn none() -> Self {
        Self::default()
    }

    /// Default noise for sampled experiments: 5% global depolarizing and
    /// a symmetric 3% readout error on every qubit.
    pub fn default_hardware_like() -> Self {
        Self {
            depolarizing_p: 0.05,
            readout: vec![ReadoutError::symmetric(0.03)],
            gate_error: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), TomographyError> {
        check_probability("depolarizing_p", self.depolarizing_p)?;
        check_probability("gate_error", self.gate_error)?;
        for (q, r) in self.readout.iter().enumerate() {
            check_probability(&format!("readout[{q}].p0_to_1"), r.p0_to_1)?;
            check_probability(&format!("readout[{q}].p1_to_0"), r.p1_to_0)?;
        }
        Ok(())
    }

    pub fn readout_for(&self, qubit: usize) -> ReadoutError {
        self.readout
            .get(qubit)
            .or(self.readout.last())
            .copied()
            .unwrap_or_default()
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_p == 0.0
            && self.gate_error == 0.0
            && self.readout.iter().all(ReadoutError::is_noiseless)
    }

    pub fn confusion_matrices(&self, num_qubits: usize) -> Vec<ConfusionMatrix> {
        (0..num_qubits)
            .map(|q| ConfusionMatrix::from_readout(self.readout_for(q)))
            .collect()
    }
}

/// `(1 − p) ρ + p I/d`
pub fn depolarize(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix, TomographyError> {
    check_probability("p", p)?;
    let d = rho.dim();
    let m = &rho.matrix().scale(1.0 - p) + &ComplexMatrix::identity(d).scale(p / d as f64);
    Ok(DensityMatrix::from_trusted(m))
}

/// Depolarizing channel acting only on `wires`:
/// `(1 − p) ρ + p Tr_wires(ρ) ⊗ I_wires / 2^k`.
pub fn depolarize_wires(
    rho: &DensityMatrix,
    wires: &[usize],
    p: f64,
) -> Result<DensityMatrix, TomographyError> {
    check_probability("p", p)?;
    if let Some(&w) = wires.iter().find(|&&w| w >= rho.num_qubits()) {
        return Err(TomographyError::InvalidProbability(format!(
            "wire {w} out of range for {} qubits",
            rho.num_qubits()
        )));
    }
    let m = rho.matrix();
    let d = m.dim();
    let mask: usize = wires.iter().map(|&w| 1usize << w).sum();
    let span = 1usize << wires.len();
    let wire_patterns: Vec<usize> = (0..span)
        .map(|l| {
            wires
                .iter()
                .enumerate()
                .filter(|(b, _)| l >> b & 1 == 1)
                .map(|(_, &w)| 1usize << w)
                .sum()
        })
        .collect();
    let out = ComplexMatrix::from_fn(d, |r, c| {
        let mut v = m[(r, c)] * (1.0 - p);
        if r & mask == c & mask {
            let (rb, cb) = (r & !mask, c & !mask);
            let traced: num_complex::Complex64 =
                wire_patterns.iter().map(|&t| m[(rb | t, cb | t)]).sum();
            v += traced * (p / span as f64);
        }
        v
    });
    Ok(DensityMatrix::from_trusted(out))
}

/// Runs `circuit` on `|0…0⟩` as a density matrix, with a depolarizing
/// kick of strength `gate_error` on each gate's wires and global
/// depolarizing of strength `depolarizing_p` on the result.
pub fn prepare_noisy(circuit: &Circuit, noise: &NoiseParams) -> Result<DensityMatrix, TomographyError> {
    noise.validate()?;
    let n = circuit.num_qubits();
    let mut rho = StateVector::zero(n).to_density();
    for g in circuit.gates() {
        if !g.kind.is_unitary_op() {
            continue;
        }
        let mut m = rho.into_matrix();
        conjugate_by_gate(g, &mut m);
        rho = DensityMatrix::from_trusted(m);
        if noise.gate_error > 0.0 {
            rho = depolarize_wires(&rho, &g.wires, noise.gate_error)?;
        }
    }
    let rho = depolarize(&rho, noise.depolarizing_p)?;
    Ok(DensityMatrix::from_trusted(rho.into_matrix().hermitian_part()))
}

/// Column-stochastic map from true to measured outcome for one qubit:
/// `[[1 − p01, p10], [p01, 1 − p10]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfusionMatrix(pub [[f64; 2]; 2]);

impl ConfusionMatrix {
    pub fn identity() -> Self {
        Self([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn from_readout(e: ReadoutError) -> Self {
        Self([[1.0 - e.p0_to_1, e.p1_to_0], [e.p0_to_1, 1.0 - e.p1_to_0]])
    }

    pub fn inverse(&self) -> Option<[[f64; 2]; 2]> {
        let [[a, b], [c, d]] = self.0;
        let det = a * d - b * c;
        (det.abs() > 1e-12).then(|| [[d / det, -b / det], [-c / det, a / det]])
    }
}

/// Applies a 2×2 matrix along qubit `q` of a probability vector.
fn apply_on_qubit(probs: &mut [f64], q: usize, m: &[[f64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..probs.len() {
        if i & bit != 0 {
            continue;
        }
        let (p0, p1) = (probs[i], probs[i | bit]);
        probs[i] = m[0][0] * p0 + m[0][1] * p1;
        probs[i | bit] = m[1][0] * p0 + m[1][1] * p1;
    }
}

/// Pushes ideal outcome probabilities through per-qubit readout confusion.
pub fn apply_confusion(probs: &[f64], confusion: &[ConfusionMatrix]) -> Vec<f64> {
    let mut out = probs.to_vec();
    for (q, c) in confusion.iter().enumerate() {
        apply_on_qubit(&mut out, q, &c.0);
    }
    out
}

/// Inverts per-qubit readout confusion on an outcome distribution. The
/// result is a quasi-probability vector (entries may be slightly negative).
pub fn mitigate_probabilities(
    probs: &[f64],
    confusion: &[ConfusionMatrix],
) -> Result<Vec<f64>, TomographyError> {
    let mut out = probs.to_vec();
    for (q, c) in confusion.iter().enumerate() {
        let inv = c
            .inverse()
            .ok_or(TomographyError::SingularConfusionMatrix { qubit: q })?;
        apply_on_qubit(&mut out, q, &inv);
    }
    Ok(out)
}
