//! `kpp-shift`: speeds, simulations, sweeps, waves, eigenvalues and
//! comparison-function checks for Fisher-KPP with a shifting diffusivity.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
    #[error("verification failed: {0}")]
    Verdict(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Verdict(_) => 3,
        }
    }
}

impl From<kpp_shift::Error> for CliError {
    fn from(e: kpp_shift::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "kpp-shift", version, about)]
struct Cli {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one key by dotted path, e.g. `parameters.c_het=3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Theoretical spreading speed and regime (JSON).
    Speeds,
    /// One simulation: front.csv and summary.json.
    Simulate,
    /// Measured vs theoretical speed over `sweep.chet_values`.
    Sweep,
    /// Travelling wave (decreasing χ) or eigen-ODE profile (increasing χ).
    Wave,
    /// Truncated Dirichlet eigenvalues and the limit estimate.
    Eigen,
    /// Check every comparison function admissible for the parameters.
    Verify,
    /// Print the effective configuration.
    Config,
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let raw = config::load(cli.config.as_deref(), &cli.sets)?;
    let out_override = std::env::var_os(config::OUT_ENV).map(PathBuf::from);
    let cfg = raw.resolve(out_override)?;
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Speeds => commands::speeds(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Wave => commands::wave(&cfg),
        Command::Eigen => commands::eigen(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::Config => Ok(serde_json::to_value(&cfg.raw).expect("config serializes")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("value serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
