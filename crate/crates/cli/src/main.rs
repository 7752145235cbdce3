use std::process::ExitCode;

use causal_forge_cli::{Cli, CliError, configure_threads, run};
use clap::Parser;

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(cli) {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summaries serialize"));
            match outcome.budget {
                Some(msg) => fail(&CliError::Budget(msg)),
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => fail(&e),
    }
}
