//! `ssw`: command-line driver for the watermark attack laboratory.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numeric failure.

mod args;
mod commands;
mod error;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliResult;
use manifest::RunManifest;

fn run(mut cli: Cli) -> CliResult<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| error::CliError::usage("--threads", e.to_string()))?;
    }
    commands::resolve_inputs(&mut cli.command)?;
    let started = Instant::now();
    let artifacts = commands::execute(&cli.command)?;
    // A replay records the command it replayed.
    let recorded = match &cli.command {
        Command::Rerun(r) => commands::replayed_command(r)?,
        cmd => cmd.clone(),
    };
    let manifest = RunManifest {
        subcommand: recorded.name().to_string(),
        seed: recorded.seed(),
        threads: cli.threads,
        artifacts,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        duration_secs: started.elapsed().as_secs_f64(),
        command: recorded,
    };
    let dir = manifest.command.out_dir().clone();
    Ok(manifest.write(&dir)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap names the offending flag on its first line.
            let text = e.to_string();
            eprintln!(
                "{}",
                text.lines().next().unwrap_or("error: invalid arguments")
            );
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
