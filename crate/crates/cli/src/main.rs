use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccr_core::experiments::{
    gnuplot_surface, run, verify, Dataset, Experiment, ExperimentError, Mode, RunConfig,
};
use ccr_core::noise_tomography::{parse_counts_json, reconstruct, reconstruct_mitigated, NoiseParams};
use ccr_core::{report, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_OK: u8 = 0;
const EXIT_VIOLATIONS: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Complementarity-relation experiments on simulated qubits.
#[derive(Parser, Debug)]
#[command(name = "ccr-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the Werner family over an (x, w) grid.
    Werner(WernerArgs),
    /// Random circuits, one qubit traced out, for d = 2, 4 or 8.
    Random(RandomArgs),
    /// Check the complete and incomplete relations on a dataset.
    Verify(VerifyArgs),
    /// Reconstruct a state from Pauli-basis counts (JSON).
    Reconstruct(ReconstructArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Sampled => Mode::Sampled,
        }
    }
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// `none`, `default`, or a path to a JSON noise description.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Relation tolerance for the exit status [default: 1e-9 exact, 0.1 sampled].
    #[arg(long)]
    tol: Option<f64>,
    /// Run on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
struct WernerArgs {
    #[arg(long)]
    grid: Option<usize>,
    /// Directory for gnuplot surfaces of C_l1, P_l1 and W_l1.
    #[arg(long)]
    surface_dir: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct RandomArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    gates: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Invert readout error described by this noise model first.
    #[arg(long)]
    mitigate: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Violations,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_noise(spec: &str) -> Result<NoiseParams, Failure> {
    match spec {
        "none" => Ok(NoiseParams::none()),
        "default" => Ok(NoiseParams::default_hardware_like()),
        path => serde_json::from_str(&read(Path::new(path))?)
            .map_err(|e| Failure::Usage(format!("noise file {path}: {e}"))),
    }
}

fn base_config(common: &CommonArgs, experiment: Experiment) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::from_json_str(&read(p)?)?,
        None => RunConfig::default(),
    };
    cfg.experiment = experiment;
    if let Some(s) = common.shots {
        cfg.shots = s;
    }
    if let Some(m) = common.mode {
        cfg.mode = m.into();
    }
    if let Some(n) = &common.noise {
        cfg.noise = parse_noise(n)?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write_output(ds: &Dataset, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => ds.write_csv(fs::File::create(p)?)?,
        None => ds.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn check(ds: &Dataset, tol: f64) -> Result<(), Failure> {
    let summary = verify(ds, tol)?;
    eprintln!("{summary}");
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

fn run_experiment(cfg: RunConfig, common: &CommonArgs) -> Result<Dataset, Failure> {
    cfg.validate()?;
    let exec = if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let ds = run(&cfg, exec)?;
    write_output(&ds, common.out.as_deref())?;
    Ok(ds)
}

fn default_tol(cfg: &RunConfig) -> f64 {
    match cfg.mode {
        Mode::Exact => 1e-9,
        Mode::Sampled => 0.1,
    }
}

fn werner(args: WernerArgs) -> Result<(), Failure> {
    let mut cfg = base_config(&args.common, Experiment::WernerSweep)?;
    if let Some(g) = args.grid {
        cfg.grid = g;
    }
    let tol = args.common.tol.unwrap_or(default_tol(&cfg));
    let ds = run_experiment(cfg, &args.common)?;
    if let Some(dir) = &args.surface_dir {
        fs::create_dir_all(dir)?;
        let suffix = if ds.column("C_l1_exp").is_some() { "exp" } else { "theory" };
        for m in ["C_l1", "P_l1", "W_l1"] {
            for s in ["theory", suffix] {
                let col = format!("{m}_{s}");
                fs::write(dir.join(format!("{col}.dat")), gnuplot_surface(&ds, &col)?)?;
            }
        }
    }
    check(&ds, tol)
}

fn random(args: RandomArgs) -> Result<(), Failure> {
    let mut cfg = base_config(&args.common, Experiment::RandomStates)?;
    if let Some(d) = args.dim {
        cfg.dim = d;
    }
    if args.states.is_some() {
        cfg.states = args.states;
    }
    if args.gates.is_some() {
        cfg.gates = args.gates;
    }
    let tol = args.common.tol.unwrap_or(default_tol(&cfg));
    let ds = run_experiment(cfg, &args.common)?;
    check(&ds, tol)
}

fn verify_cmd(args: VerifyArgs) -> Result<(), Failure> {
    let ds = Dataset::read_csv(read(&args.input)?.as_bytes())?;
    let summary = verify(&ds, args.tol)?;
    if args.json {
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        writeln!(io::stdout(), "{text}")?;
    } else {
        writeln!(io::stdout(), "{summary}")?;
    }
    if summary.passed() {
        Ok(())
    } else {
        Err(Failure::Violations)
    }
}

#[derive(Serialize)]
struct ReconstructOutput {
    state: ccr_core::states::StateJson,
    negativity_clipped: f64,
    shots_per_setting: u64,
    measures: ccr_core::MeasureReport,
}

fn reconstruct_cmd(args: ReconstructArgs) -> Result<(), Failure> {
    let records = parse_counts_json(&read(&args.input)?).map_err(|e| Failure::Usage(e.to_string()))?;
    let rec = match &args.mitigate {
        Some(spec) => {
            let n = records.first().map_or(0, |r| r.num_qubits());
            reconstruct_mitigated(&records, &parse_noise(spec)?.confusion_matrices(n))
        }
        None => reconstruct(&records),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let out = ReconstructOutput {
        state: rec.physical_estimate.to_json(),
        negativity_clipped: rec.negativity_clipped,
        shots_per_setting: rec.shots_per_setting,
        measures: report(&rec.physical_estimate, 1e-9),
    };
    let text = serde_json::to_string_pretty(&out).expect("output serializes");
    writeln!(io::stdout(), "{text}")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Werner(a) => werner(a),
        Command::Random(a) => random(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure::Violations) => ExitCode::from(EXIT_VIOLATIONS),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
