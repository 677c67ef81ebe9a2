//! `vdrd`: run, verify and analyse voter-determined random dictator elections.
//!
//! Exit codes: 0 success or match, 1 verification mismatch, 2 parse or usage
//! error, 3 no electable candidate, 4 infeasible scale, 5 attack seed not found.

use std::process::ExitCode;

use clap::Parser;

mod app;

fn main() -> ExitCode {
    let cli = app::Cli::parse();
    match app::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("vdrd: {e}");
            e.exit_code()
        }
    }
}
