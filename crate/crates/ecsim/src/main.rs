//! Command-line front end for the cluster traffic simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ecsim::config::{self, RunConfig};
use ecsim::experiment::{self, RunError};
use ecsim::selftest;

#[derive(Parser)]
#[command(
    name = "ecsim",
    version,
    about = "Byte-exact traffic simulator for erasure-coded and replicated object storage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured backend against every workload and write reports
    Run {
        /// INI-style run configuration
        #[arg(long)]
        config: PathBuf,
        /// Override a config key: section[.index].key=value (repeatable)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Compare results files row by row; the first file is the baseline
    Compare {
        /// Two or more results CSV files
        files: Vec<PathBuf>,
    },
    /// Replay a timestamp,op,offset,length trace against the configured backends
    TraceReplay {
        /// INI-style run configuration supplying cluster and backends
        #[arg(long)]
        config: PathBuf,
        /// Trace file to replay
        #[arg(long)]
        trace: PathBuf,
        /// Workload name in the report (defaults to the trace file stem)
        #[arg(long)]
        name: Option<String>,
        /// Override a config key: section[.index].key=value (repeatable)
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Check the field tables, generator matrices, and codec against
    /// independent oracles
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code().clamp(0, 255) as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { config, sets } => {
            let cfg = load_config(&config, &sets)?;
            report(experiment::run(&cfg)?)
        }
        Command::Compare { files } => {
            print!("{}", experiment::compare(&files)?);
            Ok(())
        }
        Command::TraceReplay { config, trace, name, sets } => {
            let cfg = load_config(&config, &sets)?;
            let cfg = experiment::with_trace(&cfg, &trace, name);
            report(experiment::run(&cfg)?)
        }
        Command::Selftest => match selftest::run_selftest() {
            Ok(suites) => {
                for s in suites {
                    println!("selftest {}: {} checks ok", s.name, s.checks);
                }
                Ok(())
            }
            Err(failure) => Err(RunError::Usage(format!("selftest failed: {failure}"))),
        },
    }
}

fn report(outcome: experiment::RunOutcome) -> Result<(), RunError> {
    print!("{}", outcome.summary);
    println!();
    println!("results: {}", outcome.results_csv.display());
    Ok(())
}

fn load_config(path: &Path, sets: &[String]) -> Result<RunConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let mut raw = config::parse(&text)?;
    config::apply_overrides(&mut raw, sets)?;
    Ok(config::resolve(&raw)?)
}
