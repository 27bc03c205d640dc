use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

mod commands;

use commands::{Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_INPUT),
            };
        }
    };
    let json = cli.json;
    match commands::run(cli) {
        Ok(report) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&report.json).expect("report serializes"));
            } else {
                print!("{}", report.text);
            }
            ExitCode::from(report.exit)
        }
        Err(e) => {
            if json {
                println!("{}", serde_json::json!({ "error": e.to_string() }));
            }
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
