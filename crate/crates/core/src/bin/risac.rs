use std::process::ExitCode;

use clap::CommandFactory;
use risac::cli::{parse_config, run_experiment, Args};

fn main() -> ExitCode {
    if std::env::args_os().len() <= 1 {
        let _ = Args::command().print_help();
        return ExitCode::SUCCESS;
    }
    let result = parse_config(std::env::args_os()).and_then(|exp| run_experiment(&exp));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
