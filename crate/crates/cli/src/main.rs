mod args;
mod commands;
mod io;

use std::process::ExitCode;

use clap::Parser;

use crate::io::CliError;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                CliError::Pipeline(_) => ExitCode::from(1),
            }
        }
    }
}
