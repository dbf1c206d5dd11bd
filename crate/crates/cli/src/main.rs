use std::io;
use std::process::ExitCode;

use clap::Parser;
use transwave_cli::Cli;

fn main() -> ExitCode {
    // usage errors exit with 2 from inside clap
    let cli = Cli::parse();
    match transwave_cli::run(&cli, &mut io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
