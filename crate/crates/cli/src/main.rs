//! Benchmark harness for iterative hard thresholding with adaptive
//! restricted Polyak step sizes.
//!
//! Subcommands:
//! - `generate`: materialize a synthetic instance to CSV + manifest;
//! - `solve`: run configured solvers, emit per-iteration trace CSV;
//! - `bench`: run a (dimension x seed x solver) grid, emit a summary CSV;
//! - `ingest`: validate and persist external design/response CSVs.
//!
//! Exit codes: 0 success, 2 config/schema error, 3 numeric failure,
//! 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iht_bench::commands;
use iht_bench::config::ExperimentConfig;
use iht_bench::error::{CliError, Result};
use iht_core::objective::ModelKind;

#[derive(Parser)]
#[command(name = "iht-bench", about = "Sparse estimation benchmark harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance and write it to the output directory
    Generate {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Offset added to every instance seed
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
    },
    /// Run the configured solvers and write a per-iteration trace CSV
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run the benchmark grid and write a summary CSV
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Worker threads (0 = all cores)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Validate external CSV data and persist it as an instance
    Ingest {
        /// Design matrix CSV (samples as rows)
        #[arg(long)]
        design: PathBuf,
        /// Response CSV (single column)
        #[arg(long)]
        responses: PathBuf,
        /// Model kind of the data
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Linear,
    Logistic,
    Matrix,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Linear => ModelKind::Linear,
            ModelArg::Logistic => ModelKind::Logistic,
            ModelArg::Matrix => ModelKind::Matrix,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            config,
            out,
            seed_offset,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::generate::run(&cfg, &out, seed_offset)
        }
        Command::Solve {
            config,
            out,
            seed_offset,
            threads,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            install_pool(threads)?;
            commands::solve::run(&cfg, &out, seed_offset)
        }
        Command::Bench {
            config,
            out,
            seed_offset,
            threads,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::bench::run(&cfg, &out, seed_offset, threads)
        }
        Command::Ingest {
            design,
            responses,
            model,
            out,
        } => commands::ingest::run(&design, &responses, model.into(), &out),
    }
}

fn install_pool(threads: usize) -> Result<()> {
    if threads == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
