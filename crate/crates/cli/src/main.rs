use std::process::ExitCode;

use clap::Parser;
use qsdlab_cli::{run, write_artifacts, RunConfig};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    let result = run(&cfg).and_then(|artifacts| write_artifacts(&cfg.out, &artifacts));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
