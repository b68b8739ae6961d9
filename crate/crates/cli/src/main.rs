use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = motor_cli::args::Cli::parse();
    match motor_cli::run::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
