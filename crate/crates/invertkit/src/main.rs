use std::process::ExitCode;

use clap::Parser;
use invertkit::cli::{resolve, Cli};
use invertkit::commands::execute;
use invertkit::pipeline::init_threads;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    match resolve(cli).and_then(|run| execute(&run)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
