use clap::Parser;

use dicert_cli::args::Cli;
use dicert_cli::{commands, expand_config, init_threads, CliError};

fn main() {
    let code = match real_main() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn real_main() -> Result<(), CliError> {
    init_threads()?;
    let args = expand_config(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    commands::run(&cli.command)
}
