#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

mod commands;
mod config;
mod output;

use commands::CliError;
use config::{Command, ExperimentConfig, Overrides};

/// Experiments for Jacobi-weighted histopolation.
#[derive(Parser, Debug)]
#[command(name = "jhist", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with default settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_FAILURE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let cfg = match cli
        .config
        .as_deref()
        .map(config::load_file)
        .transpose()
        .and_then(|file| ExperimentConfig::resolve(cli.command, cli.overrides, file))
    {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("jhist: configuration error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(w) = cfg.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("jhist: cannot start {w} workers: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("jhist: {e}");
            return ExitCode::from(match e {
                CliError::Config(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            });
        }
    };
    let wall = start.elapsed().as_secs_f64();
    match output::write_sidecar(&cfg, wall, outcome.passed, &outcome.outputs, &outcome.summary) {
        Ok(path) => {
            for p in &outcome.outputs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", path.display());
        }
        Err(e) => {
            eprintln!("jhist: i/o error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    }
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("jhist: {} checks failed", cfg.command.name());
        ExitCode::from(EXIT_VIOLATION)
    }
}
