use std::io;
use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = phraselm::cli::Cli::parse();
    let stdout = io::stdout();
    let code = phraselm::cli::run(cli, &mut stdout.lock());
    ExitCode::from(code)
}
