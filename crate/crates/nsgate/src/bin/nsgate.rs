//! Command-line surface: gate-fidelity sweeps, POVM inspection, and
//! amplitude tables, with CSV/JSON output for plotting and regression.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical failure (network
//! calibration, no threshold crossing, or a failed randomized cross-check).

use std::collections::HashMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use nsgate::detectors::DetectorModel;
use nsgate::gate::{
    closed_form_amplitudes, conditional_output_closed_form, conditional_output_simulated,
    simulated_amplitudes, NsGateConfig, Scheme,
};
use nsgate::optics::design_reflectivities;
use nsgate::{sweep, Error, PureState};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "nsgate",
    about = "Nonlinear-sign gate simulator: fidelity sweeps, detector POVMs, amplitude tables",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the worst-case gate fidelity over detector efficiency.
    Sweep(SweepArgs),
    /// Print detector POVM weights by photon number.
    Povm(PovmArgs),
    /// Print the output amplitude table c_ijk.
    Amplitudes(AmplitudesArgs),
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Detection scheme: ideal | dda | vlpc | cascade:N
    #[arg(long)]
    scheme: Option<String>,
    /// Lowest efficiency (must be > 0; fidelity is undefined at eta = 0)
    #[arg(long)]
    eta_min: Option<f64>,
    /// Highest efficiency (<= 1)
    #[arg(long)]
    eta_max: Option<f64>,
    /// Number of grid points, evenly spaced from eta-min to eta-max
    #[arg(long)]
    steps: Option<usize>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the randomized closed-form/simulation cross-check
    #[arg(long)]
    seed: Option<u64>,
    /// Flat key = value config file; explicit flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
struct PovmArgs {
    /// Detector model: ideal | threshold | dda | vlpc | cascade:N
    #[arg(long)]
    model: String,
    /// Detector efficiency in [0, 1]
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Largest photon number column
    #[arg(long, default_value_t = 3)]
    cutoff: u8,
}

#[derive(Args)]
struct AmplitudesArgs {
    /// First beamsplitter intensity reflectivity (default: design value)
    #[arg(long)]
    r1: Option<f64>,
    /// Second beamsplitter intensity reflectivity (default: design value)
    #[arg(long)]
    r2: Option<f64>,
    /// Third beamsplitter intensity reflectivity (default: design value)
    #[arg(long)]
    r3: Option<f64>,
    /// Amplitude source
    #[arg(long, value_enum, default_value_t = AmplitudeSource::Simulated)]
    source: AmplitudeSource,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AmplitudeSource {
    Closed,
    Simulated,
    Both,
}

/// Row of the sweep output; `minimizer_params` is
/// (theta1, theta2, phi_beta, phi_gamma).
#[derive(Serialize, Deserialize)]
struct SweepRecord {
    scheme: String,
    eta: f64,
    gate_fidelity: f64,
    success_at_one: f64,
    success_at_min: f64,
    minimizer_params: [f64; 4],
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CalibrationFailed | Error::NoCrossing | Error::NoApparentSuccess => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    let outcome = match cli.command {
        Command::Sweep(args) => cmd_sweep(args),
        Command::Povm(args) => cmd_povm(args),
        Command::Amplitudes(args) => cmd_amplitudes(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Numerical(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

/// NSGATE_THREADS caps sweep parallelism; unset means the rayon default.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("NSGATE_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

/// Twelve significant digits: stable to diff, precise enough to round-trip
/// the physics.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn read_config(path: &PathBuf) -> Result<HashMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "config line {} is not `key = value`: {line}",
                index + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_value<T: std::str::FromStr>(
    config: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>, CliError> {
    match config.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("config key `{key}` has invalid value `{raw}`"))),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = match &args.config {
        Some(path) => read_config(path)?,
        None => HashMap::new(),
    };
    let scheme_name = args
        .scheme
        .or(config.get("scheme").cloned())
        .ok_or_else(|| CliError::Usage("missing --scheme".into()))?;
    let scheme: Scheme = scheme_name
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    let eta_min = match args.eta_min {
        Some(v) => v,
        None => config_value(&config, "eta-min")?
            .ok_or_else(|| CliError::Usage("missing --eta-min".into()))?,
    };
    let eta_max = match args.eta_max {
        Some(v) => v,
        None => config_value(&config, "eta-max")?
            .ok_or_else(|| CliError::Usage("missing --eta-max".into()))?,
    };
    let steps = match args.steps {
        Some(v) => v,
        None => config_value(&config, "steps")?
            .ok_or_else(|| CliError::Usage("missing --steps".into()))?,
    };
    let format = match args.format {
        Some(v) => v,
        None => match config.get("format").map(String::as_str) {
            None => OutputFormat::Csv,
            Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(CliError::Usage(format!("unknown format `{other}`")));
            }
        },
    };
    let seed = match args.seed {
        Some(v) => Some(v),
        None => config_value(&config, "seed")?,
    };
    let out_path = args.out.or_else(|| config.get("out").map(PathBuf::from));

    if eta_min <= 0.0 {
        return Err(CliError::Usage(
            "eta-min must be > 0: the gate fidelity is undefined at eta = 0 (no apparent successes)"
                .into(),
        ));
    }
    if eta_max > 1.0 || eta_max < eta_min {
        return Err(CliError::Usage(format!(
            "invalid efficiency range [{eta_min}, {eta_max}]"
        )));
    }
    if steps == 0 {
        return Err(CliError::Usage("steps must be at least 1".into()));
    }

    if let Some(seed) = seed {
        spot_check(seed)?;
    }

    let grid: Vec<f64> = if steps == 1 {
        vec![eta_min]
    } else {
        (0..steps)
            .map(|i| eta_min + (eta_max - eta_min) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let points = sweep(scheme, &grid)?;
    let records: Vec<SweepRecord> = points
        .iter()
        .map(|p| SweepRecord {
            scheme: scheme.name(),
            eta: p.eta,
            gate_fidelity: p.result.value,
            success_at_one: p.success_at_one,
            success_at_min: p.success_at_min,
            minimizer_params: [
                p.result.minimizer.theta1,
                p.result.minimizer.theta2,
                p.result.minimizer.phi_beta,
                p.result.minimizer.phi_gamma,
            ],
        })
        .collect();

    let rendered = match format {
        OutputFormat::Csv => render_csv(&records),
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(&records)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            text.push('\n');
            text
        }
    };
    match out_path {
        Some(path) => std::fs::write(&path, rendered)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::Numerical(e.to_string()))
        }
    }
}

fn render_csv(records: &[SweepRecord]) -> String {
    let mut text = String::from("scheme,eta,gate_fidelity,success_at_one,success_at_min\n");
    for r in records {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.scheme,
            fmt12(r.eta),
            fmt12(r.gate_fidelity),
            fmt12(r.success_at_one),
            fmt12(r.success_at_min)
        ));
    }
    text
}

/// Randomized cross-check of the closed forms against simulation: amplitude
/// tables on random reflectivity triples, and conditional outputs on random
/// inputs and efficiencies. Any disagreement is a numerical failure.
fn spot_check(seed: u64) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        let r1 = rng.gen_range(0.0..1.0);
        let r2 = rng.gen_range(0.0..1.0);
        let r3 = rng.gen_range(0.0..1.0);
        let closed = closed_form_amplitudes(r1, r2, r3)?;
        let simulated = simulated_amplitudes(r1, r2, r3)?;
        if closed.max_discrepancy(&simulated) > 1e-10 {
            return Err(CliError::Numerical(format!(
                "closed-form amplitudes disagree with simulation at r = ({r1}, {r2}, {r3})"
            )));
        }
    }
    for _ in 0..5 {
        let raw: Vec<C64> = (0..3)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let psi = PureState::single_mode(&raw, 3)
            .and_then(|s| s.normalize())
            .map(|(s, _)| s)?;
        let eta = rng.gen_range(0.05..1.0);
        for scheme in [Scheme::Dda, Scheme::Vlpc] {
            let closed = conditional_output_closed_form(scheme, eta, &psi)?;
            let config = NsGateConfig::design(scheme, eta)?;
            let simulated = conditional_output_simulated(&config, &psi)?;
            if closed.unnormalized.max_diff(&simulated.unnormalized) > 1e-10 {
                return Err(CliError::Numerical(format!(
                    "conditional outputs disagree for {} at eta = {eta}",
                    scheme.name()
                )));
            }
        }
    }
    Ok(())
}

fn cmd_povm(args: PovmArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model, args.eta)?;
    let povm = model.povm(args.cutoff)?;
    let mut header = String::from("label");
    for n in 0..=args.cutoff {
        header.push_str(&format!(",n={n}"));
    }
    println!("{header}");
    for element in &povm {
        let mut row = element.label().to_string();
        for &w in element.weights() {
            row.push_str(&format!(",{}", fmt12(w)));
        }
        println!("{row}");
    }
    Ok(())
}

fn parse_model(name: &str, eta: f64) -> Result<DetectorModel, CliError> {
    match name {
        "ideal" => Ok(DetectorModel::Ideal),
        "threshold" => Ok(DetectorModel::Threshold { eta }),
        "dda" => Ok(DetectorModel::Dda { eta }),
        "vlpc" => Ok(DetectorModel::Vlpc { eta }),
        _ => {
            if let Some(n) = name.strip_prefix("cascade:") {
                let n: u32 = n
                    .parse()
                    .map_err(|_| CliError::Usage(format!("unknown model `{name}`")))?;
                Ok(DetectorModel::Cascade { n, eta })
            } else {
                Err(CliError::Usage(format!("unknown model `{name}`")))
            }
        }
    }
}

fn cmd_amplitudes(args: AmplitudesArgs) -> Result<(), CliError> {
    let (d1, d2, d3) = design_reflectivities();
    let r1 = args.r1.unwrap_or(d1);
    let r2 = args.r2.unwrap_or(d2);
    let r3 = args.r3.unwrap_or(d3);
    let print_table = |name: &str, table: &nsgate::AmplitudeTable| {
        println!("# {name}");
        println!("i,j,k,re,im");
        for (&(i, j, k), amplitude) in table.entries() {
            println!("{i},{j},{k},{},{}", fmt12(amplitude.re), fmt12(amplitude.im));
        }
    };
    match args.source {
        AmplitudeSource::Closed => {
            print_table("closed", &closed_form_amplitudes(r1, r2, r3)?);
        }
        AmplitudeSource::Simulated => {
            print_table("simulated", &simulated_amplitudes(r1, r2, r3)?);
        }
        AmplitudeSource::Both => {
            let closed = closed_form_amplitudes(r1, r2, r3)?;
            let simulated = simulated_amplitudes(r1, r2, r3)?;
            print_table("closed", &closed);
            print_table("simulated", &simulated);
            println!("max_discrepancy,{}", fmt12(closed.max_discrepancy(&simulated)));
        }
    }
    Ok(())
}
