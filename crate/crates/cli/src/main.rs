mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use config::{Cli, ConfigError, RunConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_EMPTY: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_BAD_CONFIG: u8 = 4;

pub enum Failure {
    Config(String),
    Budget(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<friable::Error> for Failure {
    fn from(e: friable::Error) -> Self {
        use friable::Error::*;
        match e {
            Budget { .. } => Failure::Budget(e.to_string()),
            InvalidInput(_) | NotInvertible { .. } | Parse(_) => Failure::Config(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    let file = match &cli.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let cfg = RunConfig::from_cli(cli, file.as_deref())?;
    let out = commands::run(&cfg)?;
    match &cfg.out {
        Some(path) => fs::write(path, &out.text).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?,
        None => std::io::stdout().write_all(out.text.as_bytes()).map_err(|e| Failure::Other(e.to_string()))?,
    }
    Ok(!out.empty)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("friable: no results");
            ExitCode::from(EXIT_EMPTY)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("friable: {msg}");
            ExitCode::from(EXIT_BAD_CONFIG)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("friable: {msg}");
            ExitCode::from(EXIT_BUDGET)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("friable: {msg}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}
