//! Coherence (visibility), predictability, correlation and purity measures
//! of a quanton's density matrix in the computational basis, together with
//! the complete (equality) and incomplete (inequality) complementarity
//! relations they satisfy.
//!
//! Four relation families are tracked, always in this order:
//!
//! | family | relation                         | bound          |
//! |--------|----------------------------------|----------------|
//! | `l1`   | `P_l1 + C_l1 + W_l1`             | `d − 1`        |
//! | `wy`   | `P_hs + C_wy + W_wy`             | `(d − 1)/d`    |
//! | `hs`   | `P_hs + C_hs + S_l`              | `(d − 1)/d`    |
//! | `re`   | `P_vn + C_re + S_vn`             | `log₂ d`       |
//!
//! The incomplete relations drop the third (correlation) term and become
//! upper bounds. All logarithms are base 2 and `0·log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;
use crate::linalg::{eig_hermitian, norm_hs_sq_offdiag, norm_l1_offdiag, ComplexMatrix};
use crate::states::DensityMatrix;

pub const RELATION_NAMES: [&str; 4] = ["l1", "wy", "hs", "re"];

/// `−Σ p log₂ p`, ignoring nonpositive entries.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

fn dim_f(rho: &DensityMatrix) -> f64 {
    rho.dim() as f64
}

fn clipped_populations(rho: &DensityMatrix) -> Vec<f64> {
    rho.populations().into_iter().map(|p| p.max(0.0)).collect()
}

/// `Σ_{j≠k} √(ρ_jj ρ_kk) = (Σ_j √ρ_jj)² − 1`, written out pairwise.
fn sqrt_population_pairs(pops: &[f64]) -> f64 {
    let roots: Vec<f64> = pops.iter().map(|p| p.sqrt()).collect();
    let mut s = 0.0;
    for (j, a) in roots.iter().enumerate() {
        for (k, b) in roots.iter().enumerate() {
            if j != k {
                s += a * b;
            }
        }
    }
    s
}

/// Spectral data shared by the measures that need it.
/// Eigenvalues below this are round-off and are treated as zero before
/// taking square roots.
pub const EIGEN_FLOOR: f64 = 1e-14;

struct Spectrum {
    eigenvalues: Vec<f64>,
    sqrt_rho: ComplexMatrix,
}

impl Spectrum {
    fn of(rho: &DensityMatrix) -> Self {
        let eig = eig_hermitian(rho.matrix()).expect("density matrix is Hermitian");
        let floor = |l: f64| if l < EIGEN_FLOOR { 0.0 } else { l };
        let eigenvalues = eig.eigenvalues.iter().map(|&l| floor(l)).collect();
        let sqrt_rho = eig.map_spectrum(|l| floor(l).sqrt());
        Self {
            eigenvalues,
            sqrt_rho,
        }
    }
}

fn c_wy_from(sqrt_rho: &ComplexMatrix) -> f64 {
    norm_hs_sq_offdiag(sqrt_rho)
}

fn w_wy_from(rho: &DensityMatrix, sqrt_rho: &ComplexMatrix) -> f64 {
    rho.populations()
        .iter()
        .enumerate()
        .map(|(j, p)| sqrt_rho[(j, j)].re.powi(2) - p * p)
        .sum()
}

/// `C_l1 = Σ_{j≠k} |ρ_jk|`
pub fn coherence_l1(rho: &DensityMatrix) -> f64 {
    norm_l1_offdiag(rho.matrix())
}

/// Wigner–Yanase coherence `C_wy = Σ_{j≠k} |⟨j|√ρ|k⟩|²`.
pub fn coherence_wy(rho: &DensityMatrix) -> f64 {
    c_wy_from(&Spectrum::of(rho).sqrt_rho)
}

/// `C_hs = Σ_{j≠k} |ρ_jk|²`
pub fn coherence_hs(rho: &DensityMatrix) -> f64 {
    norm_hs_sq_offdiag(rho.matrix())
}

/// Relative entropy of coherence `S(ρ_diag) − S(ρ)`.
pub fn coherence_re(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.populations()) - vn_entropy(rho)
}

/// `P_l1 = d − 1 − Σ_{j≠k} √(ρ_jj ρ_kk)`
pub fn predictability_l1(rho: &DensityMatrix) -> f64 {
    dim_f(rho) - 1.0 - sqrt_population_pairs(&clipped_populations(rho))
}

/// `P_hs = Σ_j ρ_jj² − 1/d`
pub fn predictability_hs(rho: &DensityMatrix) -> f64 {
    rho.populations().iter().map(|p| p * p).sum::<f64>() - 1.0 / dim_f(rho)
}

/// `P_vn = log₂ d + Σ_j ρ_jj log₂ ρ_jj`
pub fn predictability_vn(rho: &DensityMatrix) -> f64 {
    dim_f(rho).log2() - shannon_entropy(&rho.populations())
}

/// `W_l1 = Σ_{j≠k} (√(ρ_jj ρ_kk) − |ρ_jk|)`
pub fn correlation_w_l1(rho: &DensityMatrix) -> f64 {
    sqrt_population_pairs(&clipped_populations(rho)) - coherence_l1(rho)
}

/// `W_wy = Σ_j (⟨j|√ρ|j⟩² − ⟨j|ρ|j⟩²)`
pub fn correlation_w_wy(rho: &DensityMatrix) -> f64 {
    w_wy_from(rho, &Spectrum::of(rho).sqrt_rho)
}

/// `S_l = 1 − Tr ρ²`
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - rho.purity()
}

/// `S_vn = −Tr ρ log₂ ρ`
pub fn vn_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&Spectrum::of(rho).eigenvalues)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Purities {
    /// `Tr ρ²`
    pub hs: f64,
    /// `log₂ d − S_vn`
    pub vn: f64,
    /// `(d − 1) − W_l1`
    pub l1: f64,
    /// `(d − 1)/d − W_wy`
    pub wy: f64,
}

pub fn purity_measures(rho: &DensityMatrix) -> Purities {
    let d = dim_f(rho);
    Purities {
        hs: rho.purity(),
        vn: d.log2() - vn_entropy(rho),
        l1: (d - 1.0) - correlation_w_l1(rho),
        wy: (d - 1.0) / d - correlation_w_wy(rho),
    }
}

/// Bounds of the four relation families for dimension `d`.
pub fn relation_bounds(d: usize) -> [f64; 4] {
    let d = d as f64;
    [d - 1.0, (d - 1.0) / d, (d - 1.0) / d, d.log2()]
}

/// Every measure for one state, plus relation residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub d_a: usize,
    pub c_l1: f64,
    pub c_wy: f64,
    pub c_hs: f64,
    pub c_re: f64,
    pub p_l1: f64,
    pub p_hs: f64,
    pub p_vn: f64,
    pub w_l1: f64,
    pub w_wy: f64,
    pub s_l: f64,
    pub s_vn: f64,
    pub purities: Purities,
    /// `(P + C + W) − bound` per family; negative means a deficit.
    pub ccr_residuals: [f64; 4],
    /// `bound − (P + C)` per family.
    pub icr_slacks: [f64; 4],
    /// For a qubit, `1 − (2 P_hs + 2 C_hs)`: the predictability/visibility
    /// inequality `P² + V² ≤ 1` read with `P = |ρ₀₀ − ρ₁₁|`, `V = 2|ρ₀₁|`.
    pub duality_slack: Option<f64>,
    pub tolerance: f64,
}

/// Stable CSV column order for [`MeasureReport::csv_fields`].
pub const REPORT_COLUMNS: [&str; 24] = [
    "d_A", "C_l1", "C_wy", "C_hs", "C_re", "P_l1", "P_hs", "P_vn", "W_l1", "W_wy", "S_l", "S_vn",
    "purity_hs", "purity_vn", "purity_l1", "purity_wy", "ccr_l1", "ccr_wy", "ccr_hs", "ccr_re",
    "icr_l1", "icr_wy", "icr_hs", "icr_re",
];

impl MeasureReport {
    /// Partial sums `P + C` per family.
    pub fn wave_particle_sums(&self) -> [f64; 4] {
        [
            self.p_l1 + self.c_l1,
            self.p_hs + self.c_wy,
            self.p_hs + self.c_hs,
            self.p_vn + self.c_re,
        ]
    }

    /// Correlation term per family.
    pub fn correlations(&self) -> [f64; 4] {
        [self.w_l1, self.w_wy, self.s_l, self.s_vn]
    }

    pub fn ccr_holds(&self) -> bool {
        self.ccr_residuals.iter().all(|r| r.abs() <= self.tolerance)
    }

    pub fn icr_holds(&self) -> bool {
        self.icr_slacks.iter().all(|s| *s >= -self.tolerance)
    }

    pub fn measures(&self) -> [f64; 11] {
        [
            self.c_l1, self.c_wy, self.c_hs, self.c_re, self.p_l1, self.p_hs, self.p_vn, self.w_l1,
            self.w_wy, self.s_l, self.s_vn,
        ]
    }

    /// One CSV row in [`REPORT_COLUMNS`] order.
    pub fn csv_fields(&self) -> Vec<String> {
        let mut out = vec![self.d_a.to_string()];
        let p = &self.purities;
        out.extend(
            self.measures()
                .into_iter()
                .chain([p.hs, p.vn, p.l1, p.wy])
                .chain(self.ccr_residuals)
                .chain(self.icr_slacks)
                .map(|v| v.to_string()),
        );
        out
    }
}

pub fn report(rho: &DensityMatrix, tolerance: f64) -> MeasureReport {
    let d = rho.dim();
    let df = d as f64;
    let spec = Spectrum::of(rho);
    let pops = rho.populations();
    let pair_roots = sqrt_population_pairs(&clipped_populations(rho));

    let c_l1 = coherence_l1(rho);
    let c_wy = c_wy_from(&spec.sqrt_rho);
    let c_hs = coherence_hs(rho);
    let s_vn = shannon_entropy(&spec.eigenvalues);
    let h_diag = shannon_entropy(&pops);
    let c_re = h_diag - s_vn;

    let p_l1 = df - 1.0 - pair_roots;
    let p_hs = pops.iter().map(|p| p * p).sum::<f64>() - 1.0 / df;
    let p_vn = df.log2() - h_diag;

    let w_l1 = pair_roots - c_l1;
    let w_wy = w_wy_from(rho, &spec.sqrt_rho);
    let s_l = linear_entropy(rho);

    let bounds = relation_bounds(d);
    let purities = Purities {
        hs: rho.purity(),
        vn: df.log2() - s_vn,
        l1: bounds[0] - w_l1,
        wy: bounds[1] - w_wy,
    };
    let sums = [p_l1 + c_l1, p_hs + c_wy, p_hs + c_hs, p_vn + c_re];
    let corr = [w_l1, w_wy, s_l, s_vn];
    let ccr_residuals = std::array::from_fn(|i| sums[i] + corr[i] - bounds[i]);
    let icr_slacks = std::array::from_fn(|i| bounds[i] - sums[i]);

    MeasureReport {
        d_a: d,
        c_l1,
        c_wy,
        c_hs,
        c_re,
        p_l1,
        p_hs,
        p_vn,
        w_l1,
        w_wy,
        s_l,
        s_vn,
        purities,
        ccr_residuals,
        icr_slacks,
        duality_slack: (d == 2).then_some(1.0 - 2.0 * p_hs - 2.0 * c_hs),
        tolerance,
    }
}

pub fn report_batch(states: &[DensityMatrix], tolerance: f64, exec: Execution) -> Vec<MeasureReport> {
    exec.map_range(states.len(), |i| report(&states[i], tolerance))
}
