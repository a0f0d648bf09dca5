use clap::Parser;
use std::process::ExitCode;
use wavebem::app::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(cli.log.as_str())).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wavebem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
