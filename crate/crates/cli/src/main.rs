use std::process::ExitCode;

use clap::Parser;

use gsic_cli::{emit, run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match emit(&report, &cli.global) {
        Ok(Some(text)) => print!("{text}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
