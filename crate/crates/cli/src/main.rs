use std::process::ExitCode;

use clap::Parser;
use riskpath_cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|(text, out)| emit(&text, out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskpath: error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
