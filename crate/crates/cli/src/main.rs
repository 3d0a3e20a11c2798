use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use iddp_cli::error::{EXIT_OK, EXIT_USAGE};
use iddp_cli::{bench, cmd_align, cmd_oracle, Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let result = match &cli.command {
        Command::Align(cfg) => cmd_align(cfg),
        Command::Oracle(cfg) => cmd_oracle(cfg),
        Command::Bench(args) => bench::cmd_bench(args),
    };
    match result {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out
                .write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(EXIT_USAGE);
            }
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
