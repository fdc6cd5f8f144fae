use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = forcebal_cli::Cli::parse();
    match forcebal_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
