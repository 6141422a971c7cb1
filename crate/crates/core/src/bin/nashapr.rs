use std::process::ExitCode;

use clap::Parser;
use nashapr::harness::cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse())
}
