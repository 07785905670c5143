use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    framekit::cli::main_with(framekit::cli::Cli::parse())
}
