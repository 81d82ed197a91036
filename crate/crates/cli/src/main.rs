//! `ybc`: simulate, compress and check Trotterized Heisenberg-chain circuits.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use ybc::circuit_ir::{CircuitError, QasmError};
use ybc::compressor::CompressError;
use ybc::simulator::{NoiseError, SimError};
use ybc::spin_model::ModelError;

use config::{JobArgs, ModeArg};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Qasm { path: PathBuf, source: QasmError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Compress(#[from] CompressError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    /// Short machine-friendly tag printed with every diagnostic.
    fn code(&self) -> &'static str {
        let compress = |e: &CompressError| match e {
            CompressError::UnsupportedClass(_) => "UNSUPPORTED_CLASS",
            CompressError::Ybe(_) | CompressError::ResidualBudget { .. } => "UNSOLVED",
            _ => "COMPRESS",
        };
        match self {
            CliError::Config(_) | CliError::Model(_) => "CONFIG",
            CliError::Io { .. } => "IO",
            CliError::Qasm { .. } => "QASM",
            CliError::Circuit(_) => "CIRCUIT",
            CliError::Compress(e) | CliError::Sim(SimError::Compress(e)) => compress(e),
            CliError::Sim(SimError::Model(_)) => "CONFIG",
            CliError::Sim(_) => "SIMULATION",
            CliError::Noise(_) => "CONFIG",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ybc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Staggered magnetization over time, written as CSV.
    Evolve {
        #[command(flatten)]
        job: JobArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// CSV path. With several modes, `<stem>_<mode>.<ext>` is written.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Compress a QASM circuit, or the Trotter circuit of a job, to a
    /// fixed-depth block.
    Compress {
        /// QASM input; without it the circuit is built from the job.
        input: Option<PathBuf>,
        #[command(flatten)]
        job: JobArgs,
    },
    /// Compare two QASM circuits up to global phase.
    Verify {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
    },
    /// Write the Trotter circuit of a job as QASM.
    Emit {
        #[command(flatten)]
        job: JobArgs,
        /// `trotter` (default) or `compressed`.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Evolve { job, mode, out } => commands::evolve(&job, mode, out),
        Command::Compress { input, job } => commands::compress(input.as_deref(), &job),
        Command::Verify { a, b, tol } => commands::verify(&a, &b, tol),
        Command::Emit { job, mode } => commands::emit(&job, mode),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(2)
        }
    }
}
