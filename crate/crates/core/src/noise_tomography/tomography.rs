//! Pauli-basis measurement sampling and linear-inversion state tomography.
//!
//! Setting labels and outcome bitstrings are written with the highest qubit
//! first, as in `|q_{n−1} … q_0⟩`: the label `"XZ"` measures qubit 1 in the
//! X basis and qubit 0 in the Z basis, and the outcome `"10"` means qubit 1
//! read 1 and qubit 0 read 0.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{mitigate_probabilities, ConfusionMatrix, NoiseParams};
use super::TomographyError;
use crate::circuits::{conjugate_by_gate, Gate, GateKind};
use crate::exec::{derive_seed, stream_rng, Execution};
use crate::linalg::{eig_hermitian, ComplexMatrix};
use crate::states::{reduce_qubits, DensityMatrix};

/// Shots per setting used throughout the experiments.
pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Measurement basis per qubit (index = qubit), each one of X, Y, Z.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Setting(Vec<Pauli>);

impl Setting {
    pub fn new(bases: Vec<Pauli>) -> Result<Self, TomographyError> {
        if bases.is_empty() || bases.contains(&Pauli::I) {
            return Err(TomographyError::MalformedCounts(
                "a setting needs one of X, Y, Z per qubit".into(),
            ));
        }
        Ok(Self(bases))
    }

    pub fn all_z(num_qubits: usize) -> Self {
        Self(vec![Pauli::Z; num_qubits])
    }

    pub fn num_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn basis(&self, qubit: usize) -> Pauli {
        self.0[qubit]
    }

    /// Basis-change gates mapping each basis' +1 eigenstate to `|0⟩`.
    fn rotation(&self) -> Vec<Gate> {
        let mut gates = Vec::new();
        for (q, b) in self.0.iter().enumerate() {
            match b {
                Pauli::X => gates.push(Gate::h(q)),
                Pauli::Y => {
                    gates.push(Gate::single(GateKind::Sdg, q));
                    gates.push(Gate::h(q));
                }
                _ => {}
            }
        }
        gates
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().rev().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

impl FromStr for Setting {
    type Err = TomographyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bases: Option<Vec<Pauli>> = s.trim().chars().rev().map(Pauli::from_char).collect();
        let bases = bases.ok_or_else(|| TomographyError::MalformedCounts(format!("bad setting {s:?}")))?;
        Self::new(bases)
    }
}

impl TryFrom<String> for Setting {
    type Error = TomographyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Setting> for String {
    fn from(s: Setting) -> String {
        s.to_string()
    }
}

/// All `3^n` settings, qubit 0 varying fastest through X, Y, Z.
pub fn all_settings(num_qubits: usize) -> Vec<Setting> {
    let bases = [Pauli::X, Pauli::Y, Pauli::Z];
    (0..3usize.pow(num_qubits as u32))
        .map(|mut k| {
            Setting(
                (0..num_qubits)
                    .map(|_| {
                        let b = bases[k % 3];
                        k /= 3;
                        b
                    })
                    .collect(),
            )
        })
        .collect()
}

pub fn bitstring(index: usize, num_qubits: usize) -> String {
    (0..num_qubits)
        .rev()
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn parse_bitstring(s: &str, num_qubits: usize) -> Result<usize, TomographyError> {
    if s.len() != num_qubits {
        return Err(TomographyError::MalformedCounts(format!(
            "outcome {s:?} should have {num_qubits} bits"
        )));
    }
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok(acc << 1 | 1),
        _ => Err(TomographyError::MalformedCounts(format!("outcome {s:?} is not binary"))),
    })
}

/// Outcome counts for one measurement setting, in the on-disk layout
/// `{"setting": "XZY", "counts": {"010": 1234, ...}, "shots": 8192}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub setting: Setting,
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
}

impl SettingCounts {
    pub fn num_qubits(&self) -> usize {
        self.setting.num_qubits()
    }

    fn from_histogram(setting: Setting, hist: &[u64]) -> Self {
        let n = setting.num_qubits();
        let counts = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (bitstring(i, n), c))
            .collect();
        Self {
            setting,
            counts,
            shots: hist.iter().sum(),
        }
    }

    /// Empirical outcome frequencies indexed by basis index.
    pub fn frequencies(&self) -> Result<Vec<f64>, TomographyError> {
        let n = self.num_qubits();
        let mut probs = vec![0.0; 1 << n];
        let mut total = 0u64;
        for (bits, &c) in &self.counts {
            probs[parse_bitstring(bits, n)?] += c as f64;
            total += c;
        }
        if total != self.shots || self.shots == 0 {
            return Err(TomographyError::InconsistentShots(format!(
                "setting {} has {total} counts for {} shots",
                self.setting, self.shots
            )));
        }
        probs.iter_mut().for_each(|p| *p /= self.shots as f64);
        Ok(probs)
    }
}

/// Parses counts files: a JSON array of setting objects, a single object,
/// or one object per line.
pub fn parse_counts_json(text: &str) -> Result<Vec<SettingCounts>, TomographyError> {
    let json_err = |e: serde_json::Error| TomographyError::Json(e.to_string());
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return serde_json::from_str(trimmed).map_err(json_err);
    }
    if let Ok(one) = serde_json::from_str::<SettingCounts>(trimmed) {
        return Ok(vec![one]);
    }
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(json_err))
        .collect()
}

/// Outcome probabilities of measuring `rho` in `setting`, before readout error.
pub fn exact_probabilities(rho: &DensityMatrix, setting: &Setting) -> Vec<f64> {
    assert_eq!(rho.num_qubits(), setting.num_qubits(), "setting size must match state");
    let mut m = rho.matrix().clone();
    for g in setting.rotation() {
        conjugate_by_gate(&g, &mut m);
    }
    let mut probs: Vec<f64> = m.diag_real().into_iter().map(|p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Samples `shots` outcomes of `rho` in `setting`, then flips each bit with
/// the qubit's readout-error probability.
pub fn sample_measurement(
    rho: &DensityMatrix,
    setting: &Setting,
    shots: u64,
    noise: &NoiseParams,
    rng_seed: u64,
) -> Result<SettingCounts, TomographyError> {
    noise.validate()?;
    if setting.num_qubits() != rho.num_qubits() {
        return Err(TomographyError::MalformedCounts(format!(
            "setting {setting} does not match a {}-qubit state",
            rho.num_qubits()
        )));
    }
    if shots == 0 {
        return Err(TomographyError::InconsistentShots("shots must be at least 1".into()));
    }
    let n = rho.num_qubits();
    let probs = exact_probabilities(rho, setting);
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let flips: Vec<(f64, f64)> = (0..n)
        .map(|q| {
            let e = noise.readout_for(q);
            (e.p0_to_1, e.p1_to_0)
        })
        .collect();
    let noisy_readout = flips.iter().any(|&(a, b)| a > 0.0 || b > 0.0);

    let mut rng = stream_rng(rng_seed, 0);
    let mut hist = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * acc;
        let mut outcome = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        if noisy_readout {
            for (q, &(p01, p10)) in flips.iter().enumerate() {
                let flip_p = if outcome >> q & 1 == 0 { p01 } else { p10 };
                if flip_p > 0.0 && rng.random::<f64>() < flip_p {
                    outcome ^= 1 << q;
                }
            }
        }
        hist[outcome] += 1;
    }
    Ok(SettingCounts::from_histogram(setting.clone(), &hist))
}

/// Linear-inversion estimate and its projection onto physical states.
#[derive(Clone, Debug)]
pub struct StateEstimate {
    pub raw_estimate: ComplexMatrix,
    pub physical_estimate: DensityMatrix,
    /// Sum of the magnitudes of the raw estimate's negative eigenvalues.
    pub negativity_clipped: f64,
}

impl StateEstimate {
    /// Traces the raw estimate down to `keep` and projects the result.
    pub fn reduce(&self, keep: &[usize]) -> Result<StateEstimate, TomographyError> {
        reduce_raw(&self.raw_estimate, keep)
    }
}

fn reduce_raw(raw: &ComplexMatrix, keep: &[usize]) -> Result<StateEstimate, TomographyError> {
    let raw_estimate = reduce_qubits(raw, keep)?;
    let (physical_estimate, negativity_clipped) = project_to_physical(&raw_estimate)?;
    Ok(StateEstimate {
        raw_estimate,
        physical_estimate,
        negativity_clipped,
    })
}

#[derive(Clone, Debug)]
pub struct TomographyRecord {
    pub settings: Vec<SettingCounts>,
    pub shots_per_setting: u64,
    pub raw_estimate: ComplexMatrix,
    pub physical_estimate: DensityMatrix,
    pub negativity_clipped: f64,
}

impl TomographyRecord {
    pub fn basis_settings(&self) -> Vec<Setting> {
        self.settings.iter().map(|s| s.setting.clone()).collect()
    }

    /// Estimate of the subsystem on `keep`, reduced before projection.
    pub fn reduced(&self, keep: &[usize]) -> Result<StateEstimate, TomographyError> {
        reduce_raw(&self.raw_estimate, keep)
    }
}

/// `⟨P⟩` for a Pauli string (index = qubit), averaged over every setting
/// that agrees with `P` on its non-identity qubits.
fn pauli_expectation(paulis: &[Pauli], probs: &BTreeMap<Setting, Vec<f64>>) -> f64 {
    let support: usize = paulis
        .iter()
        .enumerate()
        .filter(|(_, &p)| p != Pauli::I)
        .map(|(q, _)| 1usize << q)
        .sum();
    let mut total = 0.0;
    let mut count = 0usize;
    for (setting, dist) in probs {
        let compatible = paulis
            .iter()
            .zip(&setting.0)
            .all(|(&p, &b)| p == Pauli::I || p == b);
        if compatible {
            total += parity_expectation(dist, support);
            count += 1;
        }
    }
    total / count as f64
}

/// `ρ = 2^{−n} Σ_P ⟨P⟩ P` over all `4^n` Pauli strings.
pub fn linear_inversion(
    num_qubits: usize,
    probs: &BTreeMap<Setting, Vec<f64>>,
) -> Result<ComplexMatrix, TomographyError> {
    let missing: Vec<String> = all_settings(num_qubits)
        .into_iter()
        .filter(|s| !probs.contains_key(s))
        .map(|s| s.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(TomographyError::IncompleteSettings { missing });
    }
    let d = 1usize << num_qubits;
    let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    let mut raw = ComplexMatrix::zeros(d);
    for k in 0..4usize.pow(num_qubits as u32) {
        let paulis: Vec<Pauli> = (0..num_qubits).map(|q| all[k / 4usize.pow(q as u32) % 4]).collect();
        let coef = pauli_expectation(&paulis, probs) / d as f64;
        if coef == 0.0 {
            continue;
        }
        let flip: usize = paulis
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .map(|(q, _)| 1usize << q)
            .sum();
        for col in 0..d {
            let mut phase = Complex64::new(coef, 0.0);
            for (q, p) in paulis.iter().enumerate() {
                let bit = col >> q & 1;
                match (p, bit) {
                    (Pauli::Y, 0) => phase *= Complex64::i(),
                    (Pauli::Y, _) => phase *= -Complex64::i(),
                    (Pauli::Z, 1) => phase = -phase,
                    _ => {}
                }
            }
            raw[(col ^ flip, col)] += phase;
        }
    }
    Ok(raw)
}

/// Nearest unit-trace PSD matrix with the same eigenvectors: negative
/// eigenvalues are zeroed smallest-first and the deficit is spread evenly
/// over the remaining ones.
pub fn project_to_physical(raw: &ComplexMatrix) -> Result<(DensityMatrix, f64), TomographyError> {
    let herm = raw.hermitian_part();
    let trace = herm.trace().re;
    let eig = eig_hermitian(&herm.scale(1.0 / trace)).map_err(crate::states::StateError::from)?;
    let negativity: f64 = eig.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();

    let mut lambdas = eig.eigenvalues.clone(); // ascending
    let d = lambdas.len();
    let mut deficit = 0.0;
    let mut lo = 0;
    while lo < d {
        let remaining = (d - lo) as f64;
        if lambdas[lo] + deficit / remaining < 0.0 {
            deficit += lambdas[lo];
            lambdas[lo] = 0.0;
            lo += 1;
        } else {
            break;
        }
    }
    let share = deficit / (d - lo) as f64;
    for l in &mut lambdas[lo..] {
        *l += share;
    }
    let fixed = crate::linalg::EigenDecomposition {
        eigenvalues: lambdas,
        eigenvectors: eig.eigenvectors,
    };
    let rho = DensityMatrix::from_trusted(fixed.reconstruct().hermitian_part());
    Ok((rho, negativity))
}

pub fn estimate_from_probabilities(
    num_qubits: usize,
    probs: &BTreeMap<Setting, Vec<f64>>,
) -> Result<StateEstimate, TomographyError> {
    let raw_estimate = linear_inversion(num_qubits, probs)?;
    let (physical_estimate, negativity_clipped) = project_to_physical(&raw_estimate)?;
    Ok(StateEstimate {
        raw_estimate,
        physical_estimate,
        negativity_clipped,
    })
}

fn check_records(records: &[SettingCounts]) -> Result<(usize, u64), TomographyError> {
    let first = records
        .first()
        .ok_or_else(|| TomographyError::IncompleteSettings {
            missing: vec!["<all>".into()],
        })?;
    let n = first.num_qubits();
    let shots = first.shots;
    let mut seen = std::collections::HashSet::new();
    for r in records {
        if r.num_qubits() != n {
            return Err(TomographyError::MalformedCounts(format!(
                "setting {} does not have {n} qubits",
                r.setting
            )));
        }
        if r.shots != shots {
            return Err(TomographyError::InconsistentShots(format!(
                "setting {} has {} shots, expected {shots}",
                r.setting, r.shots
            )));
        }
        if !seen.insert(r.setting.clone()) {
            return Err(TomographyError::MalformedCounts(format!(
                "setting {} appears twice",
                r.setting
            )));
        }
    }
    Ok((n, shots))
}

fn frequencies_by_setting(
    records: &[SettingCounts],
    mitigate: Option<&[ConfusionMatrix]>,
) -> Result<BTreeMap<Setting, Vec<f64>>, TomographyError> {
    records
        .iter()
        .map(|r| {
            let mut f = r.frequencies()?;
            if let Some(conf) = mitigate {
                f = mitigate_probabilities(&f, conf)?;
            }
            Ok((r.setting.clone(), f))
        })
        .collect()
}

/// Reconstructs the state from counts over all `3^n` Pauli settings.
pub fn reconstruct(records: &[SettingCounts]) -> Result<TomographyRecord, TomographyError> {
    reconstruct_inner(records, None)
}

/// As [`reconstruct`], after inverting per-qubit readout confusion.
pub fn reconstruct_mitigated(
    records: &[SettingCounts],
    confusion: &[ConfusionMatrix],
) -> Result<TomographyRecord, TomographyError> {
    reconstruct_inner(records, Some(confusion))
}

fn reconstruct_inner(
    records: &[SettingCounts],
    mitigate: Option<&[ConfusionMatrix]>,
) -> Result<TomographyRecord, TomographyError> {
    let (n, shots) = check_records(records)?;
    let freqs = frequencies_by_setting(records, mitigate)?;
    let est = estimate_from_probabilities(n, &freqs)?;
    Ok(TomographyRecord {
        settings: records.to_vec(),
        shots_per_setting: shots,
        raw_estimate: est.raw_estimate,
        physical_estimate: est.physical_estimate,
        negativity_clipped: est.negativity_clipped,
    })
}

/// Per-setting corrected quasi-probabilities (indexed by basis index).
pub fn readout_mitigation(
    counts: &SettingCounts,
    confusion: &[ConfusionMatrix],
) -> Result<Vec<f64>, TomographyError> {
    mitigate_probabilities(&counts.frequencies()?, confusion)
}

/// `⟨Z_S⟩` over the qubits in `qubit_mask` from an outcome distribution.
pub fn parity_expectation(probs: &[f64], qubit_mask: usize) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, p)| if (i & qubit_mask).count_ones().is_multiple_of(2) { *p } else { -*p })
        .sum()
}

/// Samples every Pauli setting of `rho` (in parallel when enabled) and
/// reconstructs it. Setting `k` uses the seed stream `derive_seed(seed, k)`.
pub fn simulate_tomography(
    rho: &DensityMatrix,
    shots: u64,
    noise: &NoiseParams,
    seed: u64,
    exec: Execution,
) -> Result<TomographyRecord, TomographyError> {
    let settings = all_settings(rho.num_qubits());
    let records: Result<Vec<SettingCounts>, _> = exec
        .map_range(settings.len(), |k| {
            sample_measurement(rho, &settings[k], shots, noise, derive_seed(seed, k as u64))
        })
        .into_iter()
        .collect();
    reconstruct(&records?)
}

/// Exact-probability tomography (the infinite-shot limit).
pub fn exact_tomography(rho: &DensityMatrix) -> Result<StateEstimate, TomographyError> {
    let probs = all_settings(rho.num_qubits())
        .into_iter()
        .map(|s| {
            let p = exact_probabilities(rho, &s);
            (s, p)
        })
        .collect();
    estimate_from_probabilities(rho.num_qubits(), &probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_tomography::noise::{apply_confusion, ReadoutError};
    use crate::states::{random_density_matrix, validate, StateVector};

    fn plus() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::new(vec![Complex64::new(s, 0.0); 2]).unwrap().to_density()
    }

    #[test]
    fn setting_labels_are_big_endian() {
        let s: Setting = "XZ".parse().unwrap();
        assert_eq!(s.basis(1), Pauli::X);
        assert_eq!(s.basis(0), Pauli::Z);
        assert_eq!(s.to_string(), "XZ");
        assert!("XI".parse::<Setting>().is_err());
        assert_eq!(all_settings(2).len(), 9);
        assert_eq!(bitstring(0b01, 2), "01");
        assert_eq!(parse_bitstring("10", 2).unwrap(), 0b10);
        assert!(parse_bitstring("1", 2).is_err());
    }

    #[test]
    fn z_basis_ket0_gives_all_zeros() {
        let rho = StateVector::zero(1).to_density();
        let c = sample_measurement(&rho, &Setting::all_z(1), 1000, &NoiseParams::none(), 1).unwrap();
        assert_eq!(c.counts.get("0"), Some(&1000));
        assert_eq!(c.counts.len(), 1);
    }

    #[test]
    fn x_basis_plus_gives_all_zeros() {
        let c = sample_measurement(&plus(), &"X".parse().unwrap(), 1000, &NoiseParams::none(), 2).unwrap();
        assert_eq!(c.counts.get("0"), Some(&1000));
    }

    #[test]
    fn y_basis_rotation() {
        // |+i⟩ = (|0⟩ + i|1⟩)/√2
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = StateVector::new(vec![Complex64::new(s, 0.0), Complex64::new(0.0, s)])
            .unwrap()
            .to_density();
        let p = exact_probabilities(&rho, &"Y".parse().unwrap());
        assert!((p[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn readout_error_rate_within_binomial_band() {
        let rho = StateVector::zero(1).to_density();
        let noise = NoiseParams {
            readout: vec![ReadoutError { p0_to_1: 0.062, p1_to_0: 0.0 }],
            ..NoiseParams::none()
        };
        let shots = 8192;
        let c = sample_measurement(&rho, &Setting::all_z(1), shots, &noise, 3).unwrap();
        let ones = *c.counts.get("1").unwrap_or(&0) as f64;
        let sigma = (shots as f64 * 0.062 * 0.938).sqrt();
        assert!((ones - 0.062 * shots as f64).abs() < 3.0 * sigma, "{ones}");
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let rho = random_density_matrix(2, 4);
        let s: Setting = "XY".parse().unwrap();
        let noise = NoiseParams::default_hardware_like();
        let a = sample_measurement(&rho, &s, 500, &noise, 9).unwrap();
        let b = sample_measurement(&rho, &s, 500, &noise, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.values().sum::<u64>(), 500);
    }

    #[test]
    fn exact_inversion_is_identity() {
        for n in 1..=2 {
            for seed in 0..20 {
                let rho = random_density_matrix(n, seed);
                let est = exact_tomography(&rho).unwrap();
                assert!(est.raw_estimate.max_abs_diff(rho.matrix()) < 1e-12);
            }
        }
    }

    #[test]
    fn missing_settings_reported() {
        let rho = random_density_matrix(1, 1);
        let recs: Vec<SettingCounts> = ["X", "Z"]
            .iter()
            .map(|s| sample_measurement(&rho, &s.parse().unwrap(), 10, &NoiseParams::none(), 0).unwrap())
            .collect();
        match reconstruct(&recs) {
            Err(TomographyError::IncompleteSettings { missing }) => assert_eq!(missing, vec!["Y"]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(reconstruct(&[]).is_err());
    }

    #[test]
    fn unequal_shots_rejected() {
        let rho = random_density_matrix(1, 1);
        let none = NoiseParams::none();
        let recs = vec![
            sample_measurement(&rho, &"X".parse().unwrap(), 10, &none, 0).unwrap(),
            sample_measurement(&rho, &"Y".parse().unwrap(), 10, &none, 0).unwrap(),
            sample_measurement(&rho, &"Z".parse().unwrap(), 11, &none, 0).unwrap(),
        ];
        assert!(matches!(reconstruct(&recs), Err(TomographyError::InconsistentShots(_))));
    }

    #[test]
    fn projection_clips_and_redistributes() {
        // Bloch vector of length 1.2 along z: eigenvalues 1.1, -0.1
        let raw = ComplexMatrix::diagonal(&[1.1, -0.1]);
        let (rho, neg) = project_to_physical(&raw).unwrap();
        assert!((neg - 0.1).abs() < 1e-14);
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::diagonal(&[1.0, 0.0])) < 1e-14);
        // three-level spread: (0.6, 0.5, -0.1) -> (0.55, 0.45, 0) ... padded to d = 4
        let raw = ComplexMatrix::diagonal(&[0.6, 0.45, 0.05, -0.1]);
        let (rho, _) = project_to_physical(&raw).unwrap();
        // -0.1 zeroed; 0.05 - 0.1/3 > 0 stays
        let want = [0.6 - 0.1 / 3.0, 0.45 - 0.1 / 3.0, 0.05 - 0.1 / 3.0, 0.0];
        for (got, w) in rho.populations().iter().zip(want) {
            assert!((got - w).abs() < 1e-14);
        }
        let raw = ComplexMatrix::diagonal(&[0.7, 0.36, 0.02, -0.08]);
        let (rho, _) = project_to_physical(&raw).unwrap();
        // 0.02 - 0.08/3 < 0 -> zero it; deficit 0.06 over two
        let want = [0.67, 0.33, 0.0, 0.0];
        for (got, w) in rho.populations().iter().zip(want) {
            assert!((got - w).abs() < 1e-14);
        }
    }

    #[test]
    fn physical_estimate_always_valid() {
        let noise = NoiseParams::default_hardware_like();
        for seed in 0..10 {
            let n = 1 + (seed % 2) as usize;
            let rho = StateVector::basis(n, 0).to_density();
            let rec = simulate_tomography(&rho, 256, &noise, seed, Execution::Sequential).unwrap();
            assert!(validate(rec.physical_estimate.matrix().clone()).is_ok());
            assert_eq!(rec.settings.len(), 3usize.pow(n as u32));
        }
    }

    #[test]
    fn ket0_tomography_is_close() {
        let rho = StateVector::zero(1).to_density();
        let rec = simulate_tomography(&rho, DEFAULT_SHOTS, &NoiseParams::none(), 5, Execution::Parallel).unwrap();
        assert!(rec.physical_estimate.trace_distance(&rho) < 0.03);
    }

    #[test]
    fn parallel_and_sequential_tomography_agree() {
        let rho = random_density_matrix(2, 12);
        let noise = NoiseParams::default_hardware_like();
        let a = simulate_tomography(&rho, 300, &noise, 1, Execution::Sequential).unwrap();
        let b = simulate_tomography(&rho, 300, &noise, 1, Execution::Parallel).unwrap();
        assert_eq!(a.settings, b.settings);
        assert!(a.raw_estimate.max_abs_diff(&b.raw_estimate) == 0.0);
    }

    #[test]
    fn mitigation_recovers_exact_expectations() {
        let rho = random_density_matrix(2, 6);
        let conf = [
            ConfusionMatrix::from_readout(ReadoutError { p0_to_1: 0.062, p1_to_0: 0.024 }),
            ConfusionMatrix::from_readout(ReadoutError::symmetric(0.04)),
        ];
        let setting = Setting::all_z(2);
        let ideal = exact_probabilities(&rho, &setting);
        let noisy = apply_confusion(&ideal, &conf);
        let fixed = mitigate_probabilities(&noisy, &conf).unwrap();
        for mask in 1..4 {
            assert!((parity_expectation(&fixed, mask) - parity_expectation(&ideal, mask)).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_mitigation_leaves_counts() {
        let rho = random_density_matrix(1, 2);
        let c = sample_measurement(&rho, &Setting::all_z(1), 100, &NoiseParams::none(), 1).unwrap();
        let fixed = readout_mitigation(&c, &[ConfusionMatrix::identity()]).unwrap();
        assert_eq!(fixed, c.frequencies().unwrap());
    }

    #[test]
    fn mitigation_moves_z_toward_one() {
        let rho = StateVector::zero(1).to_density();
        let noise = NoiseParams {
            readout: vec![ReadoutError { p0_to_1: 0.062, p1_to_0: 0.0 }],
            ..NoiseParams::none()
        };
        let c = sample_measurement(&rho, &Setting::all_z(1), DEFAULT_SHOTS, &noise, 8).unwrap();
        let raw_z = parity_expectation(&c.frequencies().unwrap(), 1);
        let fixed = readout_mitigation(&c, &noise.confusion_matrices(1)).unwrap();
        let mit_z = parity_expectation(&fixed, 1);
        assert!((1.0 - mit_z).abs() < (1.0 - raw_z).abs());
    }

    #[test]
    fn counts_json_formats() {
        let rho = random_density_matrix(2, 3);
        let c = sample_measurement(&rho, &"XZ".parse().unwrap(), 64, &NoiseParams::none(), 4).unwrap();
        let one = serde_json::to_string(&c).unwrap();
        assert!(one.contains(r#""setting":"XZ""#));
        assert_eq!(parse_counts_json(&one).unwrap(), vec![c.clone()]);
        let arr = serde_json::to_string(&vec![c.clone(), c.clone()]).unwrap();
        assert_eq!(parse_counts_json(&arr).unwrap().len(), 2);
        let lines = format!("{one}\n{one}\n");
        assert_eq!(parse_counts_json(&lines).unwrap().len(), 2);
        let parsed: SettingCounts =
            serde_json::from_str(r#"{"setting": "XZY", "counts": {"010": 3, "111": 1}, "shots": 4}"#).unwrap();
        assert_eq!(parsed.setting.basis(2), Pauli::X);
        assert!(parsed.frequencies().is_ok());
    }
}
