use std::process::ExitCode;

use clap::Parser;
use iohbench::args::Cli;

fn main() -> ExitCode {
    match iohbench::commands::execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
