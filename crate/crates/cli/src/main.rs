//! `superrad`: collective decay of oscillator ensembles from the command line.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a numerical contract
//! (truncation, integrator convergence, tolerance) fails.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{load_config, ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "superrad", version, about = "Superradiance of coupled harmonic oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Run configuration file.
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the radiance class, dark fraction and normal fraction.
    Classify(ConfigArg),
    /// Closed-form intensity and M/R/L expectations, optionally against the master-equation oracle.
    Evolve {
        #[command(flatten)]
        config: ConfigArg,
        /// Overlay the truncated master-equation solution.
        #[arg(long)]
        oracle: bool,
        /// Total-quanta cutoff of the oracle space (defaults to the state's maximum).
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Bosonic Dicke-basis populations over time.
    Populations(ConfigArg),
    /// Two-time correlation c_ij(t, 0).
    Correlations {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
    },
    /// Oscillators in the brightest Dicke state against fully excited atoms.
    CompareAtomic {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        n: usize,
    },
    /// Dark fraction of identical product squeezed coherent states over (α, r).
    SweepFraction {
        #[command(flatten)]
        config: ConfigArg,
        /// start:stop:count
        #[arg(long, default_value = "0:2:41")]
        alpha_range: String,
        /// start:stop:count
        #[arg(long, default_value = "0:2:41")]
        r_range: String,
    },
    /// Dark fraction of a photon after a coupled-waveguide section.
    Waveguide {
        #[command(flatten)]
        config: ConfigArg,
        /// One-based input guide.
        #[arg(long)]
        input_guide: usize,
        /// Nearest-neighbour waveguide coupling J.
        #[arg(long, default_value_t = 1.0)]
        j: f64,
        /// Largest J·t on the grid; the sample count comes from [time].
        #[arg(long, default_value_t = 4.0)]
        jt_max: f64,
    },
    /// Synthesize and verify a Law-Eberly pulse schedule.
    LawEberly {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated coefficients c_0, c_1, ... (complex literals such as 0.5-0.2i).
        #[arg(long)]
        target: String,
        /// Prepare in (C_k + C_N)/√2 instead of the bright mode C_N.
        #[arg(long)]
        dark_mode: Option<usize>,
    },
    /// Run the invariant suite and print a pass/fail table.
    OracleCheck {
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(superrad_core::Error),
    Io(std::io::Error),
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Core(e) if e.is_numerical() => write!(f, "numerical failure: {e}"),
            CliError::Core(e) => write!(f, "validation error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Usage(e) => write!(f, "usage error: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<superrad_core::Error> for CliError {
    fn from(e: superrad_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SUPERRAD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("SUPERRAD_THREADS = {raw:?} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(String, bool), CliError> {
    configure_threads()?;
    let load = |c: &ConfigArg| -> Result<RunConfig, CliError> { Ok(load_config(&c.config)?) };
    let report = match &cli.command {
        Command::Classify(c) => commands::classify_cmd(&load(c)?)?,
        Command::Evolve { config, oracle, cutoff } => commands::evolve_cmd(&load(config)?, *oracle, *cutoff)?,
        Command::Populations(c) => commands::populations_cmd(&load(c)?)?,
        Command::Correlations { config, i, j } => commands::correlations_cmd(&load(config)?, *i, *j)?,
        Command::CompareAtomic { config, n } => commands::compare_atomic_cmd(&load(config)?, *n)?,
        Command::SweepFraction { config, alpha_range, r_range } => {
            commands::sweep_fraction_cmd(&load(config)?, alpha_range, r_range)?
        }
        Command::Waveguide { config, input_guide, j, jt_max } => {
            commands::waveguide_cmd(&load(config)?, *input_guide, *j, *jt_max)?
        }
        Command::LawEberly { config, target, dark_mode } => commands::law_eberly_cmd(&load(config)?, target, *dark_mode)?,
        Command::OracleCheck { config } => {
            if let Some(path) = config {
                load_config(path)?;
            }
            return Ok(commands::oracle_check_cmd());
        }
    };
    Ok((report, true))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((report, ok)) => {
            print!("{report}");
            if ok {
                ExitCode::SUCCESS
            } else {
                eprintln!("numerical failure: invariant suite reported failures");
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
