//! Experiment drivers: the Werner-family sweep and the random-state
//! dimension study, their CSV datasets and the relation checker.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::circuits::{random_circuit, werner_preparation_circuit, CircuitError};
use crate::exec::{derive_seed, Execution};
use crate::measures::{relation_bounds, report, MeasureReport, RELATION_NAMES, REPORT_COLUMNS};
use crate::noise_tomography::{
    prepare_noisy, simulate_tomography, NoiseParams, TomographyError, DEFAULT_SHOTS,
};
use crate::states::{werner_state, DensityMatrix, StateError, StateVector, WernerParams};

pub const DEFAULT_GRID: usize = 21;
pub const DEFAULT_SEED: u64 = 42;
pub const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed dataset: {0}")]
    MalformedDataset(String),
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    WernerSweep,
    RandomStates,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Exact,
    Sampled,
}

impl std::str::FromStr for Mode {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "sampled" => Ok(Mode::Sampled),
            _ => Err(ExperimentError::Config(format!("unknown mode {s:?}"))),
        }
    }
}

/// Run parameters. `states` and `gates` default per dimension:
/// d=2 → 100 states of 5 gates, d=4 → 150 of 4, d=8 → 200 of 4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub grid: usize,
    pub dim: usize,
    pub states: Option<usize>,
    pub gates: Option<usize>,
    pub shots: u64,
    pub noise: NoiseParams,
    pub seed: u64,
    pub mode: Mode,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::WernerSweep,
            grid: DEFAULT_GRID,
            dim: 2,
            states: None,
            gates: None,
            shots: DEFAULT_SHOTS,
            noise: NoiseParams::none(),
            seed: DEFAULT_SEED,
            mode: Mode::Exact,
        }
    }
}

impl RunConfig {
    pub fn werner(grid: usize, mode: Mode) -> Self {
        Self {
            grid,
            mode,
            ..Self::default()
        }
    }

    pub fn random(dim: usize, mode: Mode) -> Self {
        Self {
            experiment: Experiment::RandomStates,
            dim,
            mode,
            ..Self::default()
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Number of qubits of the reduced system, `log₂ d`.
    pub fn system_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn num_states(&self) -> usize {
        self.states.unwrap_or(match self.dim {
            2 => 100,
            4 => 150,
            _ => 200,
        })
    }

    pub fn num_gates(&self) -> usize {
        self.gates.unwrap_or(if self.dim == 2 { 5 } else { 4 })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        match self.experiment {
            Experiment::WernerSweep if self.grid < 2 => {
                return bad(format!("grid needs at least 2 steps, got {}", self.grid))
            }
            Experiment::RandomStates if !SUPPORTED_DIMS.contains(&self.dim) => {
                return bad(format!("dimension must be one of 2, 4, 8, got {}", self.dim))
            }
            Experiment::RandomStates if self.num_states() == 0 => {
                return bad("need at least one state".into())
            }
            _ => {}
        }
        if self.mode == Mode::Sampled && self.shots == 0 {
            return bad("sampled mode needs at least one shot".into());
        }
        self.noise.validate()?;
        Ok(())
    }
}

/// A CSV table held as strings so that it round-trips byte for byte.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Dataset {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ExperimentError::MalformedDataset(e.to_string()))?;
        Ok(Self { headers, rows })
    }

    /// Numeric value at `(row, column name)`.
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        self.rows[row].get(self.column(name)?)?.parse().ok()
    }
}

fn report_headers(suffix: &str) -> impl Iterator<Item = String> + '_ {
    REPORT_COLUMNS[1..].iter().map(move |c| format!("{c}_{suffix}"))
}

fn report_cells(r: &MeasureReport) -> impl Iterator<Item = String> {
    r.csv_fields().into_iter().skip(1)
}

const THEORY: &str = "theory";
const EXPERIMENT: &str = "exp";

#[derive(Clone, Debug)]
pub struct WernerPoint {
    pub x: f64,
    pub w: f64,
    pub theory: MeasureReport,
    pub experiment: Option<MeasureReport>,
}

pub fn grid_values(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect()
}

/// Sampled-mode estimate of subsystem A: prepare both qubits with the
/// preparation circuit, reconstruct the 2-qubit state and trace out B
/// (before the positivity projection).
pub fn werner_experiment(p: WernerParams, cfg: &RunConfig, seed: u64) -> Result<DensityMatrix> {
    let prepared = prepare_noisy(&werner_preparation_circuit(p), &cfg.noise)?;
    let rec = simulate_tomography(&prepared, cfg.shots, &cfg.noise, seed, Execution::Sequential)?;
    Ok(rec.reduced(&[1])?.physical_estimate)
}

pub fn werner_points(cfg: &RunConfig, exec: Execution) -> Result<Vec<WernerPoint>> {
    cfg.validate()?;
    let axis = grid_values(cfg.grid);
    let n = cfg.grid;
    exec.map_range(n * n, |k| {
        let (x, w) = (axis[k / n], axis[k % n]);
        let p = WernerParams::new(w, x)?;
        let theory = report(&werner_state(p), 0.0);
        let experiment = match cfg.mode {
            Mode::Exact => None,
            Mode::Sampled => Some(report(&werner_experiment(p, cfg, derive_seed(cfg.seed, k as u64))?, 0.0)),
        };
        Ok(WernerPoint {
            x,
            w,
            theory,
            experiment,
        })
    })
    .into_iter()
    .collect()
}

pub fn run_werner_sweep(cfg: &RunConfig) -> Result<Dataset> {
    run_werner_sweep_with(cfg, Execution::default())
}

pub fn run_werner_sweep_with(cfg: &RunConfig, exec: Execution) -> Result<Dataset> {
    let points = werner_points(cfg, exec)?;
    Ok(werner_dataset(&points, cfg.mode))
}

fn werner_dataset(points: &[WernerPoint], mode: Mode) -> Dataset {
    let mut headers: Vec<String> = ["x", "w", "d_A", "bound"].map(String::from).to_vec();
    headers.extend(report_headers(THEORY));
    if mode == Mode::Sampled {
        headers.extend(report_headers(EXPERIMENT));
    }
    let rows = points
        .iter()
        .map(|p| {
            let mut row = vec![p.x.to_string(), p.w.to_string(), "2".into(), "1".into()];
            row.extend(report_cells(&p.theory));
            if let Some(e) = &p.experiment {
                row.extend(report_cells(e));
            }
            row
        })
        .collect();
    Dataset { headers, rows }
}

/// Gnuplot `splot`-ready surface of one column of a Werner dataset:
/// `x w value` lines, one blank-line-separated block per `x`.
pub fn gnuplot_surface(ds: &Dataset, column: &str) -> Result<String> {
    let missing = |c: &str| ExperimentError::MalformedDataset(format!("missing column {c}"));
    let xi = ds.column("x").ok_or_else(|| missing("x"))?;
    let wi = ds.column("w").ok_or_else(|| missing("w"))?;
    let ci = ds.column(column).ok_or_else(|| missing(column))?;
    let mut out = format!("# x w {column}\n");
    let mut last_x: Option<&str> = None;
    for r in &ds.rows {
        if last_x.is_some_and(|x| x != r[xi]) {
            out.push('\n');
        }
        last_x = Some(&r[xi]);
        out.push_str(&format!("{} {} {}\n", r[xi], r[wi], r[ci]));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct RandomStateRow {
    pub index: usize,
    pub theory: MeasureReport,
    pub experiment: Option<MeasureReport>,
}

/// Global state of sample `index`: a random circuit on `n + 1` qubits
/// applied to `|0…0⟩`.
pub fn random_sample_circuit(cfg: &RunConfig, index: usize) -> crate::circuits::Circuit {
    random_circuit(
        cfg.system_qubits() + 1,
        cfg.num_gates(),
        derive_seed(cfg.seed, 2 * index as u64),
    )
}

/// Exact reduced state of sample `index` (highest qubit traced out).
pub fn random_sample_state(cfg: &RunConfig, index: usize) -> Result<DensityMatrix> {
    let n = cfg.system_qubits();
    let global = random_sample_circuit(cfg, index).apply(&StateVector::zero(n + 1))?;
    let keep: Vec<usize> = (0..n).collect();
    Ok(global.to_density().reduce(&keep)?)
}

/// Noisy preparation followed by tomography of the kept qubits.
pub fn random_sample_experiment(cfg: &RunConfig, index: usize) -> Result<DensityMatrix> {
    let n = cfg.system_qubits();
    let keep: Vec<usize> = (0..n).collect();
    let prepared = prepare_noisy(&random_sample_circuit(cfg, index), &cfg.noise)?.reduce(&keep)?;
    let seed = derive_seed(cfg.seed, 2 * index as u64 + 1);
    let rec = simulate_tomography(&prepared, cfg.shots, &cfg.noise, seed, Execution::Sequential)?;
    Ok(rec.physical_estimate)
}

pub fn random_rows(cfg: &RunConfig, exec: Execution) -> Result<Vec<RandomStateRow>> {
    let mut cfg = cfg.clone();
    cfg.experiment = Experiment::RandomStates;
    cfg.validate()?;
    exec.map_range(cfg.num_states(), |i| {
        let theory = report(&random_sample_state(&cfg, i)?, 0.0);
        let experiment = match cfg.mode {
            Mode::Exact => None,
            Mode::Sampled => Some(report(&random_sample_experiment(&cfg, i)?, 0.0)),
        };
        Ok(RandomStateRow {
            index: i,
            theory,
            experiment,
        })
    })
    .into_iter()
    .collect()
}

pub fn run_random_states(cfg: &RunConfig) -> Result<Dataset> {
    run_random_states_with(cfg, Execution::default())
}

pub fn run_random_states_with(cfg: &RunConfig, exec: Execution) -> Result<Dataset> {
    let rows = random_rows(cfg, exec)?;
    Ok(random_dataset(&rows, cfg.dim, cfg.mode))
}

/// Per-state rows (`kind = state`) followed by one `kind = mean` row.
fn random_dataset(rows: &[RandomStateRow], dim: usize, mode: Mode) -> Dataset {
    let mut headers: Vec<String> = ["index", "kind", "d_A", "bound"].map(String::from).to_vec();
    headers.extend(report_headers(THEORY));
    if mode == Mode::Sampled {
        headers.extend(report_headers(EXPERIMENT));
    }
    let bound = (dim - 1).to_string();
    let mut numeric: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let mut out: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells: Vec<String> = report_cells(&r.theory).collect();
            if let Some(e) = &r.experiment {
                cells.extend(report_cells(e));
            }
            numeric.push(cells.iter().map(|c| c.parse().unwrap_or(f64::NAN)).collect());
            let mut row = vec![r.index.to_string(), "state".into(), dim.to_string(), bound.clone()];
            row.extend(cells);
            row
        })
        .collect();
    let width = numeric.first().map_or(0, Vec::len);
    let mut mean = vec![String::new(), "mean".into(), dim.to_string(), bound.clone()];
    mean.extend((0..width).map(|j| {
        (numeric.iter().map(|r| r[j]).sum::<f64>() / numeric.len() as f64).to_string()
    }));
    out.push(mean);
    Dataset { headers, rows: out }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Ccr,
    Icr,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationVerdict {
    /// e.g. `ccr_l1_theory`
    pub name: String,
    pub kind: RelationKind,
    pub violations: usize,
    /// Largest `|residual|` for a CCR, most negative slack for an ICR.
    pub worst: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifySummary {
    pub tolerance: f64,
    pub rows_checked: usize,
    pub violating_rows: usize,
    pub relations: Vec<RelationVerdict>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.violating_rows == 0
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.relations {
            writeln!(
                f,
                "{:<18} {} violations={} worst={:.3e}",
                r.name,
                if r.passed { "PASS" } else { "FAIL" },
                r.violations,
                r.worst
            )?;
        }
        write!(
            f,
            "{} of {} rows violate a relation at tolerance {:e}",
            self.violating_rows, self.rows_checked, self.tolerance
        )
    }
}

struct Block {
    suffix: &'static str,
    cols: [usize; 7], // C_l1 C_wy C_hs C_re P_l1 P_hs P_vn
    corr: [usize; 4], // W_l1 W_wy S_l S_vn
    stored_ccr: [Option<usize>; 4],
    stored_icr: [Option<usize>; 4],
}

fn find_blocks(ds: &Dataset) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for suffix in [THEORY, EXPERIMENT] {
        let col = |c: &str| ds.column(&format!("{c}_{suffix}"));
        let Some(first) = col("C_l1") else { continue };
        let need = |c: &str| {
            col(c).ok_or_else(|| ExperimentError::MalformedDataset(format!("missing column {c}_{suffix}")))
        };
        let mut cols = [first; 7];
        for (slot, name) in cols.iter_mut().zip(["C_l1", "C_wy", "C_hs", "C_re", "P_l1", "P_hs", "P_vn"]) {
            *slot = need(name)?;
        }
        let mut corr = [0; 4];
        for (slot, name) in corr.iter_mut().zip(["W_l1", "W_wy", "S_l", "S_vn"]) {
            *slot = need(name)?;
        }
        blocks.push(Block {
            suffix,
            cols,
            corr,
            stored_ccr: RELATION_NAMES.map(|r| col(&format!("ccr_{r}"))),
            stored_icr: RELATION_NAMES.map(|r| col(&format!("icr_{r}"))),
        });
    }
    if blocks.is_empty() {
        return Err(ExperimentError::MalformedDataset(
            "no measure columns (expected C_l1_theory or C_l1_exp)".into(),
        ));
    }
    Ok(blocks)
}

/// Checks the four complete and four incomplete relations on every state
/// row, recomputing residuals from the measure columns. A stored residual
/// column, when present, is checked as well.
pub fn verify(ds: &Dataset, tolerance: f64) -> Result<VerifySummary> {
    let d_col = ds
        .column("d_A")
        .ok_or_else(|| ExperimentError::MalformedDataset("missing column d_A".into()))?;
    let kind_col = ds.column("kind");
    let blocks = find_blocks(ds)?;

    let mut relations: Vec<RelationVerdict> = blocks
        .iter()
        .flat_map(|b| {
            [RelationKind::Ccr, RelationKind::Icr].into_iter().flat_map(move |kind| {
                RELATION_NAMES.iter().map(move |r| RelationVerdict {
                    name: format!("{}_{r}_{}", if kind == RelationKind::Ccr { "ccr" } else { "icr" }, b.suffix),
                    kind,
                    violations: 0,
                    worst: 0.0,
                    passed: true,
                })
            })
        })
        .collect();

    let mut rows_checked = 0;
    let mut violating_rows = 0;
    for (i, row) in ds.rows.iter().enumerate() {
        if kind_col.is_some_and(|k| row.get(k).map(String::as_str) != Some("state")) {
            continue;
        }
        let num = |c: usize| -> Result<f64> {
            row.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| !v.is_nan())
                .ok_or_else(|| ExperimentError::MalformedDataset(format!("row {}: bad value in column {}", i + 1, ds.headers[c])))
        };
        let d = num(d_col)?;
        if d < 2.0 || d.fract() != 0.0 {
            return Err(ExperimentError::MalformedDataset(format!("row {}: bad d_A {d}", i + 1)));
        }
        let bounds = relation_bounds(d as usize);
        rows_checked += 1;
        let mut row_bad = false;
        for (bi, b) in blocks.iter().enumerate() {
            let c: Vec<f64> = b.cols.iter().map(|&c| num(c)).collect::<Result<_>>()?;
            let w: Vec<f64> = b.corr.iter().map(|&c| num(c)).collect::<Result<_>>()?;
            let sums = [c[4] + c[0], c[5] + c[1], c[5] + c[2], c[6] + c[3]];
            for r in 0..4 {
                let mut ccr = (sums[r] + w[r] - bounds[r]).abs();
                if let Some(s) = b.stored_ccr[r] {
                    ccr = ccr.max(num(s)?.abs());
                }
                let mut icr = bounds[r] - sums[r];
                if let Some(s) = b.stored_icr[r] {
                    icr = icr.min(num(s)?);
                }
                let base = bi * 8;
                let v = &mut relations[base + r];
                v.worst = v.worst.max(ccr);
                if ccr > tolerance {
                    v.violations += 1;
                    row_bad = true;
                }
                let v = &mut relations[base + 4 + r];
                v.worst = v.worst.min(icr);
                if icr < -tolerance {
                    v.violations += 1;
                    row_bad = true;
                }
            }
        }
        violating_rows += usize::from(row_bad);
    }
    if rows_checked == 0 {
        return Err(ExperimentError::MalformedDataset("no state rows".into()));
    }
    for v in &mut relations {
        v.passed = v.violations == 0;
    }
    Ok(VerifySummary {
        tolerance,
        rows_checked,
        violating_rows,
        relations,
    })
}

/// Runs whichever experiment `cfg` names.
pub fn run(cfg: &RunConfig, exec: Execution) -> Result<Dataset> {
    match cfg.experiment {
        Experiment::WernerSweep => run_werner_sweep_with(cfg, exec),
        Experiment::RandomStates => run_random_states_with(cfg, exec),
    }
}
