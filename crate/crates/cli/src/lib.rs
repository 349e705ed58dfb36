//! The `fockmetro` command line: each subcommand reads a TOML run config,
//! writes CSV tables and a JSON summary into the output directory, and
//! echoes the resolved config next to them.
//!
//! Exit codes are 0 on success, 1 for invalid input and 2 for numerical
//! failures; failures also print one JSON line on stderr.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fockmetro_core::Error;

pub use config::RunConfig;

#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    /// One-line machine-readable error record.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.message(),
        })
        .to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} error: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fockmetro", version, about = "Phase-estimation computations for a Mach-Zehnder interferometer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantum Fisher matrix of coherent ⊗ squeezed inputs over an (α², N̄) sweep
    Qfi(CommonArgs),
    /// Numerically optimize the secondary input state at fixed N̄
    Optimize(CommonArgs),
    /// Classical Fisher information of photon counting over a phase grid
    Cfi(CommonArgs),
    /// Monte Carlo phase estimation
    Estimate(CommonArgs),
    /// Mode entanglement after the input beam splitter
    Entropy(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Qfi(_) => "qfi",
            Command::Optimize(_) => "optimize",
            Command::Cfi(_) => "cfi",
            Command::Estimate(_) => "estimate",
            Command::Entropy(_) => "entropy",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Qfi(a) | Command::Optimize(a) | Command::Cfi(a) | Command::Estimate(a) | Command::Entropy(a) => a,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct CommonArgs {
    /// Run config (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: config `output_dir`, else `fockmetro-out`]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the per-mode Fock truncation
    #[arg(long)]
    pub dim: Option<usize>,
    /// Worker threads; runs are currently sequential, the value is recorded
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Loads the config, applies flag overrides and runs the command. Returns
/// the files written.
pub fn run(command: &Command) -> Result<Vec<PathBuf>, CliError> {
    let args = command.args();
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(dim) = args.dim {
        cfg.dim = Some(dim);
    }
    if args.threads == Some(0) {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    cfg.threads = Some(args.threads.or(cfg.threads).unwrap_or(1));
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fockmetro-out"));
    commands::execute(command.name(), &cfg, &out_dir)
}
