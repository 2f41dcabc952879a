use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    ExitCode::from(irdeco_cli::run(irdeco_cli::Cli::parse()))
}
