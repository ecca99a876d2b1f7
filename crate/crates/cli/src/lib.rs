//! Experiment driver: configuration, study runners and their artifacts.

pub mod args;
pub mod config;
pub mod output;
pub mod studies;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;
use crate::config::ExperimentConfig;
use crate::studies::{run_study, StudyError};

pub const EXIT_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

/// Parses `args`, runs the selected study and maps the result to the exit
/// status: 0 when its pass condition holds, 1 when not, 2 for a bad
/// configuration, 3 for a runtime failure.
pub fn run_cli<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.print_config {
        print!("{}", cfg.to_toml());
        return ExitCode::SUCCESS;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    match pool.install(|| run_study(&cfg)) {
        Ok(outcome) => {
            let study = cfg.study().map_or("?", |s| s.name());
            let verdict = if outcome.passed { "PASS" } else { "FAIL" };
            println!("{study}: {verdict} ({})", outcome.summary);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(StudyError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, config::ConfigError> {
    let base = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    base.resolve(&cli.overrides())
}
