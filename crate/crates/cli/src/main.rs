mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command};

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("KFREEWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("KFREEWALK_THREADS must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    init_threads()?;
    match cli.command {
        Command::Theta(a) => commands::theta(a),
        Command::Beta(a) => commands::beta(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Exact(a) => commands::exact(a),
        Command::Verify(a) => commands::verify(a),
        Command::Count(a) => commands::count(a),
        Command::Decay(a) => commands::decay(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
