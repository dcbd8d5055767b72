use std::process::ExitCode;

use clap::Parser;

use waste_radar::cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(outcome) => outcome.into(),
        Err(e) => {
            log::error!("{e:#}");
            e.exit_code()
        }
    }
}
