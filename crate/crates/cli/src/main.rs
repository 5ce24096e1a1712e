use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cxa::{CliError, Report, RunOptions};

/// Runs complex-action lattice experiments from JSON configs.
///
/// Exit codes: 0 success, 1 an in-run check failed (or output could not be
/// written), 2 invalid config or arguments, 3 oracle or output cap exceeded,
/// 4 numerical failure.
#[derive(Parser)]
#[command(name = "cxa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: one per core).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run(Common),
    /// Run a scenario once per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweepable parameter (see list-scenarios).
        #[arg(long)]
        param: String,
        /// Comma-separated values; `start:stop:count` expands to a range.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// List scenario kinds and their sweepable parameters.
    ListScenarios,
    /// Parse and range-check a config without running it.
    Validate {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "U64")]
        seed: Option<u64>,
    },
}

fn report(result: Result<Report, CliError>) -> ExitCode {
    match result {
        Ok(r) => {
            for c in &r.results.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("wrote {} files to {}", r.files.len(), r.out_dir.display());
            ExitCode::from(r.exit_code() as u8)
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(c) => report(cxa::run_path(&c.config, &c.options())),
        Command::Sweep { common, param, values } => {
            report(cxa::sweep_path(&common.config, &param, &values, &common.options()))
        }
        Command::ListScenarios => {
            for line in cxa::scenario_listing() {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config, seed } => match cxa::load_config(&config, seed) {
            Ok(cfg) => {
                println!("{}: ok ({}, sha256 {})", config.display(), cfg.kind.name(), cfg.hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
