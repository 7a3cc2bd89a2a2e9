mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;
use gridshort::Error;

use args::{Cli, Command};

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || e.downcast_ref::<csv::Error>()
                .is_some_and(|c| matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe))
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BreakerLimit { .. } | Error::RawCountCeiling { .. } | Error::Overflow(_)) => 2,
        Some(Error::OracleMismatch(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Enumerate(run) => commands::enumerate(run),
        Command::Shortlist(run) => commands::shortlist(run),
        Command::Baseline(run) => commands::baseline(run),
        Command::Heatmap(run) => commands::heatmap(run),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) if broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(Error::Invalid(violations)) = err.downcast_ref::<Error>() {
                for v in violations {
                    eprintln!("  - {v}");
                }
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
