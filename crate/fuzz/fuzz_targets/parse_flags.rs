#![no_main]

use clap::Parser;
use libfuzzer_sys::fuzz_target;
use sburgers_cli::args::Cli;
use sburgers_cli::config::ExperimentConfig;

// Arguments are NUL-separated.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let args = std::iter::once("sburgers").chain(text.split('\0'));
    let Ok(cli) = Cli::try_parse_from(args) else {
        return;
    };
    let _ = ExperimentConfig::default().resolve(&cli.overrides());
});
