use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use shsbc::{run, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                // bad flags are malformed input, not an inconclusive check
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    ExitCode::from(run(cli, &args))
}
