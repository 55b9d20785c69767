//! Library behind the `swingleg` binary: plan the swing, evaluate and
//! optimize leg dimensions, and verify the dynamics model.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
pub mod config;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("optimization ended without a feasible design: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Infeasible(_) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("stdout: {e}"))
    }
}

impl From<swingleg::Error> for CliError {
    fn from(e: swingleg::Error) -> Self {
        match e {
            swingleg::Error::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EnergyModeArg {
    Absolute,
    Signed,
}

#[derive(Debug, Parser)]
#[command(
    name = "swingleg",
    version,
    about = "Swing-leg dynamics and dimension optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// GA seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    energy_mode: Option<EnergyModeArg>,

    /// Worker threads for candidate evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write output files only, without the stdout summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the planned joint trajectory and foot path.
    Plan,
    /// Torque trace and metrics for a geometry, with ratios to the configured one.
    Evaluate {
        /// Geometry JSON to compare against the configured geometry.
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Run the genetic algorithm.
    Optimize,
    /// Finite-difference oracle, power balance and forward round trip.
    Verify,
    /// Forward-simulate under the planned torques and write power curves.
    Simulate {
        /// Second geometry whose peak power is compared against the first.
        #[arg(long)]
        geometry: Option<PathBuf>,
    },
    /// Print the effective configuration as JSON.
    Config,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.ga.seed = seed;
    }
    if let Some(mode) = cli.energy_mode {
        cfg.energy_mode = match mode {
            EnergyModeArg::Absolute => swingleg::EnergyMode::Absolute,
            EnergyModeArg::Signed => swingleg::EnergyMode::Signed,
        };
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(CliError::Config("--threads must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))?
    };
    let mut stdout = std::io::stdout().lock();
    let mut sink = std::io::sink();
    let out: &mut dyn Write = if cli.quiet { &mut sink } else { &mut stdout };
    match &cli.command {
        Command::Plan => commands::plan(&cfg, out),
        Command::Evaluate { geometry } => commands::evaluate(&cfg, geometry.as_deref(), out),
        Command::Optimize => commands::optimize(&cfg, &pool, out),
        Command::Verify => commands::verify(&cfg, out),
        Command::Simulate { geometry } => commands::simulate(&cfg, geometry.as_deref(), out),
        Command::Config => {
            println!("{}", cfg.to_json());
            Ok(())
        }
    }
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run_args<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(cli)
}

/// Entry point for the binary: clap handles help and usage errors itself.
pub fn main_with_exit_code() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
