//! Validated quantum states, the one-qubit Werner-like family and its
//! two-qubit purification, and random state sources.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::stream_rng;
use crate::linalg::{
    self, eigenvalues_hermitian, partial_trace, ComplexMatrix, LinalgError, HERMITIAN_TOL, PSD_TOL,
    ZERO,
};

pub const TRACE_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("not Hermitian (max |m - m†| = {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("dimension {dim} is not a power of two")]
    NotQubitDimension { dim: usize },
    #[error("state vector not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("malformed state JSON: {0}")]
    Json(String),
}

fn qubits_for_dim(dim: usize) -> Result<usize, StateError> {
    if dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(StateError::NotQubitDimension { dim })
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix on `num_qubits`
/// qubits (little-endian basis indexing).
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    num_qubits: usize,
}

/// Checks the density-matrix axioms, reporting the first one violated
/// (Hermiticity, then trace, then positivity).
pub fn validate(m: ComplexMatrix) -> Result<DensityMatrix, StateError> {
    let num_qubits = qubits_for_dim(m.dim())?;
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(StateError::NotHermitian { deviation });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(StateError::TraceNotOne { trace });
    }
    let min_eigenvalue = eigenvalues_hermitian(&m)?[0];
    if min_eigenvalue < -PSD_TOL {
        return Err(StateError::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix { matrix: m, num_qubits })
}

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self, StateError> {
        validate(m)
    }

    /// Skips validation; callers guarantee the axioms hold by construction.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        let num_qubits = matrix.dim().trailing_zeros() as usize;
        debug_assert_eq!(1 << num_qubits, matrix.dim());
        Self { matrix, num_qubits }
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        Self::from_trusted(ComplexMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self::from_trusted(ComplexMatrix::outer(psi.amplitudes()))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Populations `ρ_jj`.
    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diag_real()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigenvalues_hermitian(&self.matrix).expect("density matrix is Hermitian")
    }

    /// `Tr ρ²`
    pub fn purity(&self) -> f64 {
        linalg::frobenius_product(&self.matrix, &self.matrix).re
    }

    /// Reduced state on `keep` (qubit indices). The kept qubits are
    /// renumbered from 0 in ascending order.
    pub fn reduce(&self, keep: &[usize]) -> Result<DensityMatrix, StateError> {
        Ok(Self::from_trusted(reduce_qubits(&self.matrix, keep)?))
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = &self.matrix - &other.matrix;
        0.5 * eigenvalues_hermitian(&diff)
            .expect("difference of Hermitian matrices")
            .iter()
            .map(|l| l.abs())
            .sum::<f64>()
    }

    pub fn to_json(&self) -> StateJson {
        let d = self.dim();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..d).map(|r| self.matrix.row(r).iter().map(f).collect()).collect()
        };
        StateJson {
            num_qubits: self.num_qubits,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn from_json(json: &StateJson) -> Result<Self, StateError> {
        let d = 1usize << json.num_qubits;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !shape_ok(&json.re) || !shape_ok(&json.im) {
            return Err(StateError::Json(format!(
                "expected {d}x{d} re/im arrays for {} qubits",
                json.num_qubits
            )));
        }
        let m = ComplexMatrix::from_fn(d, |r, c| Complex64::new(json.re[r][c], json.im[r][c]));
        validate(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("state JSON serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, StateError> {
        let json: StateJson = serde_json::from_str(s).map_err(|e| StateError::Json(e.to_string()))?;
        Self::from_json(&json)
    }
}

/// On-disk state format: `{"num_qubits": n, "re": [[...]], "im": [[...]]}`,
/// rows in row-major order.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateVectorJson {
    pub num_qubits: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct StateJson {
    pub num_qubits: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Normalized pure state of `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    num_qubits: usize,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        let num_qubits = qubits_for_dim(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(Self {
            amplitudes,
            num_qubits,
        })
    }

    /// Normalizes `amplitudes` (which must not be all zero).
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(StateError::NotNormalized { norm_sqr: norm * norm });
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(amplitudes)
    }

    pub(crate) fn from_trusted(amplitudes: Vec<Complex64>) -> Self {
        let num_qubits = amplitudes.len().trailing_zeros() as usize;
        Self {
            amplitudes,
            num_qubits,
        }
    }

    /// `|0…0⟩`
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            num_qubits,
        }
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn to_json(&self) -> StateVectorJson {
        StateVectorJson {
            num_qubits: self.num_qubits,
            re: self.amplitudes.iter().map(|z| z.re).collect(),
            im: self.amplitudes.iter().map(|z| z.im).collect(),
        }
    }
}

/// Parameters of `w|ψ⟩⟨ψ| + (1−w)/2·I` with `|ψ⟩ = √x|0⟩ + √(1−x)|1⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WernerParams {
    w: f64,
    x: f64,
}

impl WernerParams {
    pub fn new(w: f64, x: f64) -> Result<Self, StateError> {
        for (name, v) in [("w", w), ("x", x)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(StateError::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { w, x })
    }

    /// Mixing weight.
    pub fn w(&self) -> f64 {
        self.w
    }

    /// Population parameter.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Pure component `√x|0⟩ + √(1−x)|1⟩`.
    pub fn pure_component(&self) -> StateVector {
        StateVector::from_trusted(vec![
            Complex64::new(self.x.sqrt(), 0.0),
            Complex64::new((1.0 - self.x).sqrt(), 0.0),
        ])
    }
}

/// Partial trace of an `n`-qubit operator onto the qubits in `keep`,
/// renumbered from 0 in ascending order. The input need not be a state.
pub fn reduce_qubits(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix, StateError> {
    let n = m.dim().trailing_zeros() as usize;
    if m.dim() != 1 << n || keep.iter().any(|&q| q >= n) {
        return Err(LinalgError::DimensionMismatch(format!(
            "cannot keep qubits {keep:?} of a {}-dimensional operator",
            m.dim()
        ))
        .into());
    }
    let factors: Vec<usize> = keep.iter().map(|&q| n - 1 - q).collect();
    Ok(partial_trace(m, &vec![2; n], &factors)?)
}

pub fn werner_state(p: WernerParams) -> DensityMatrix {
    let (w, x) = (p.w, p.x);
    let off = w * (x * (1.0 - x)).sqrt();
    let m = ComplexMatrix::from_real_rows(&[
        &[w * x + (1.0 - w) / 2.0, off],
        &[off, w * (1.0 - x) + (1.0 - w) / 2.0],
    ])
    .expect("2x2");
    DensityMatrix::from_trusted(m)
}

/// Two-qubit purification of [`werner_state`]:
///
/// `(−√(1−x)|0⟩ + √x|1⟩)_A ⊗ √((1−w)/2)|0⟩_B + (√x|0⟩ + √(1−x)|1⟩)_A ⊗ √((1+w)/2)|1⟩_B`
///
/// Amplitudes are in Kronecker order `A ⊗ B`, i.e. A is qubit 1 and B is
/// qubit 0. Tracing out qubit 0 recovers the Werner state.
pub fn werner_purification(p: WernerParams) -> StateVector {
    let (w, x) = (p.w, p.x);
    let (sx, sx1) = (x.sqrt(), (1.0 - x).sqrt());
    let (b0, b1) = (((1.0 - w) / 2.0).sqrt(), ((1.0 + w) / 2.0).sqrt());
    let re = |v: f64| Complex64::new(v, 0.0);
    StateVector::from_trusted(vec![re(-sx1 * b0), re(sx * b1), re(sx * b0), re(sx1 * b1)])
}

/// `G†G / Tr(G†G)` with i.i.d. standard complex Gaussian entries in `G`.
pub fn random_density_matrix(num_qubits: usize, rng_seed: u64) -> DensityMatrix {
    let mut rng = stream_rng(rng_seed, 0x005E_EDD3);
    random_density_matrix_with(num_qubits, &mut rng)
}

pub fn random_density_matrix_with(num_qubits: usize, rng: &mut impl Rng) -> DensityMatrix {
    let d = 1usize << num_qubits;
    let g = ComplexMatrix::from_fn(d, |_, _| complex_gaussian(rng));
    let m = &g.adjoint() * &g;
    let t = m.trace().re;
    DensityMatrix::from_trusted(m.scale(1.0 / t).hermitian_part())
}

/// Haar-random pure state (normalized complex Gaussian vector).
pub fn random_state_vector(num_qubits: usize, rng_seed: u64) -> StateVector {
    let mut rng = stream_rng(rng_seed, 0x005E_ED5F);
    random_state_vector_with(num_qubits, &mut rng)
}

pub fn random_state_vector_with(num_qubits: usize, rng: &mut impl Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..1usize << num_qubits)
        .map(|_| complex_gaussian(rng))
        .collect();
    StateVector::normalized(amps).expect("gaussian vector is nonzero")
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn validate_accepts_maximally_mixed() {
        let rho = validate(ComplexMatrix::identity(2).scale(0.5)).unwrap();
        assert_eq!(rho.num_qubits(), 1);
    }

    #[test]
    fn validate_reports_trace() {
        let err = validate(ComplexMatrix::diagonal(&[0.7, 0.4])).unwrap_err();
        assert!(matches!(err, StateError::TraceNotOne { trace } if close(trace, 1.1, 1e-15)));
    }

    #[test]
    fn validate_reports_negativity() {
        // eigenvalues 0.5 ± 0.6
        let m = ComplexMatrix::from_real_rows(&[&[0.5, 0.6], &[0.6, 0.5]]).unwrap();
        let err = validate(m).unwrap_err();
        assert!(matches!(err, StateError::NotPsd { min_eigenvalue } if close(min_eigenvalue, -0.1, 1e-12)));
    }

    #[test]
    fn validate_reports_hermiticity_and_dimension() {
        let m = ComplexMatrix::from_real_rows(&[&[0.5, 0.1], &[0.0, 0.5]]).unwrap();
        assert!(matches!(validate(m), Err(StateError::NotHermitian { .. })));
        let m = ComplexMatrix::identity(3).scale(1.0 / 3.0);
        assert!(matches!(validate(m), Err(StateError::NotQubitDimension { dim: 3 })));
    }

    #[test]
    fn werner_edge_cases() {
        for x in [0.0, 0.3, 1.0] {
            let rho = werner_state(WernerParams::new(0.0, x).unwrap());
            assert!(rho.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        }
        let rho = werner_state(WernerParams::new(1.0, 1.0).unwrap());
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[1.0, 0.0])) < 1e-15);
        let rho = werner_state(WernerParams::new(0.5, 0.5).unwrap());
        let want = ComplexMatrix::from_real_rows(&[&[0.5, 0.25], &[0.25, 0.5]]).unwrap();
        assert!(rho.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn werner_params_range_checked() {
        assert!(WernerParams::new(1.2, 0.5).is_err());
        assert!(WernerParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn werner_spectrum_and_purity() {
        for i in 0..=10 {
            for j in 0..=10 {
                let (w, x) = (i as f64 / 10.0, j as f64 / 10.0);
                let rho = werner_state(WernerParams::new(w, x).unwrap());
                let ev = rho.eigenvalues();
                assert!(close(ev[0], (1.0 - w) / 2.0, 1e-12));
                assert!(close(ev[1], (1.0 + w) / 2.0, 1e-12));
                assert!(close(rho.purity(), (1.0 + w * w) / 2.0, 1e-12));
                assert!(validate(rho.into_matrix()).is_ok());
            }
        }
    }

    #[test]
    fn purification_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = werner_purification(WernerParams::new(1.0, 0.5).unwrap());
        let want = [0.0, s, 0.0, s];
        for (z, w) in psi.amplitudes().iter().zip(want) {
            assert!((z - Complex64::new(w, 0.0)).norm() < 1e-15);
        }

        let psi = werner_purification(WernerParams::new(0.0, 0.37).unwrap());
        // each B branch carries weight 1/2
        let amps = psi.amplitudes();
        assert!(close(amps[0].norm_sqr() + amps[2].norm_sqr(), 0.5, 1e-15));
        assert!(close(amps[1].norm_sqr() + amps[3].norm_sqr(), 0.5, 1e-15));
        let rho_a = psi.to_density().reduce(&[1]).unwrap();
        assert!(rho_a.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn purification_normalized_and_reduces_to_werner() {
        for i in 0..=20 {
            for j in 0..=20 {
                let p = WernerParams::new(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                let psi = werner_purification(p);
                assert!(close(psi.norm_sqr(), 1.0, 1e-12));
                let rho_a = psi.to_density().reduce(&[1]).unwrap();
                assert!(rho_a.matrix().max_abs_diff(werner_state(p).matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn purification_trace_matches_symbolic_expansion() {
        // w = 0.6, x = 0.25: ρ00 = w x + (1-w)/2, ρ01 = w √(x(1-x))
        let p = WernerParams::new(0.6, 0.25).unwrap();
        let rho_a = werner_purification(p).to_density().reduce(&[1]).unwrap();
        let m = rho_a.matrix();
        assert!(close(m[(0, 0)].re, 0.6 * 0.25 + 0.2, 1e-15));
        assert!(close(m[(1, 1)].re, 0.6 * 0.75 + 0.2, 1e-15));
        assert!(close(m[(0, 1)].re, 0.6 * (0.25f64 * 0.75).sqrt(), 1e-15));
    }

    #[test]
    fn random_density_matrices_valid_and_deterministic() {
        for n in 1..=3 {
            for seed in 0..20 {
                let rho = random_density_matrix(n, seed);
                assert!(validate(rho.matrix().clone()).is_ok());
            }
        }
        assert_eq!(random_density_matrix(2, 7), random_density_matrix(2, 7));
        assert_ne!(random_density_matrix(2, 7), random_density_matrix(2, 8));
    }

    #[test]
    fn random_density_matrix_mean_is_maximally_mixed() {
        let n = 10_000;
        let mut mean = ComplexMatrix::zeros(2);
        for seed in 0..n {
            mean = &mean + random_density_matrix(1, seed).matrix();
        }
        let mean = mean.scale(1.0 / n as f64);
        assert!(mean.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 0.02);
    }

    #[test]
    fn state_vector_checks() {
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(StateVector::new(vec![Complex64::new(1.0, 0.0); 3]).is_err());
        assert!(StateVector::normalized(vec![ZERO; 2]).is_err());
        let v = random_state_vector(3, 1);
        assert!(close(v.norm_sqr(), 1.0, 1e-12));
    }

    #[test]
    fn reduce_uses_little_endian_qubits() {
        // |q1 q0⟩ = |01⟩ : qubit 0 in |1⟩, qubit 1 in |0⟩
        let rho = StateVector::basis(2, 0b01).to_density();
        let q0 = rho.reduce(&[0]).unwrap();
        let q1 = rho.reduce(&[1]).unwrap();
        assert!(close(q0.matrix()[(1, 1)].re, 1.0, 1e-15));
        assert!(close(q1.matrix()[(0, 0)].re, 1.0, 1e-15));
        assert!(rho.reduce(&[2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let rho = random_density_matrix(2, 3);
        let s = rho.to_json_string();
        let back = DensityMatrix::from_json_str(&s).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert!(DensityMatrix::from_json_str(r#"{"num_qubits":1,"re":[[1]],"im":[[0]]}"#).is_err());
        let bad = r#"{"num_qubits":1,"re":[[0.7,0],[0,0.4]],"im":[[0,0],[0,0]]}"#;
        assert!(matches!(
            DensityMatrix::from_json_str(bad),
            Err(StateError::TraceNotOne { .. })
        ));
    }
}
