mod args;
mod commands;
mod output;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command, Format};
use crate::commands::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    let format = cli.global.format.unwrap_or(match cli.command {
        Command::SweepR { .. } => Format::Csv,
        _ => Format::Json,
    });
    let report = commands::run(&cli.command, cli.global.seed)?;
    let bytes = output::render(&report, format, !cli.global.no_timestamp)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    std::io::stdout()
        .write_all(&bytes)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(())
}
