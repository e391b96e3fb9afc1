use std::process;

use clap::Parser;
use slu_cli::{execute, CliError};

fn main() {
    let cli = slu_cli::args::Cli::parse();
    match execute(cli) {
        Ok(()) => {}
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            process::exit(2);
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            process::exit(1);
        }
    }
}
