//! `ecl`: command-line front end for the peer-trust evaluation harness.
//!
//! Subcommands cover the whole pipeline: `standardize` raw corpora,
//! `rollouts` to fill peer reasoning pools, `split` into
//! history/train/test, `build-episodes`, `perturb`, `render --dump`, `run`,
//! `export-rl`, `report`, and `sweep`. Exit codes: 0 success, 1 domain
//! error, 2 usage error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();

    let cli = Cli::parse();
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: failed to start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    match runtime.block_on(commands::dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
