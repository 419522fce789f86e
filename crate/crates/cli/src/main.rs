use std::process::ExitCode;

use clap::Parser;
use rough_angle_cli::{configure_threads, execute, ExperimentConfig, EXIT_ERROR};

fn main() -> ExitCode {
    let cfg = ExperimentConfig::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    let code = execute(&cfg, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code as u8)
}
