//! `ebsw` command-line tool.
//!
//! Exit codes: 0 success, 2 argument errors, 3 data errors, 4 divergence.
//! Machine-readable output goes to stdout, diagnostics to stderr.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Lib(ebsw::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Lib(ebsw::Error::Argument(_)) => 2,
            CliError::Lib(ebsw::Error::Diverged { .. }) => 4,
            CliError::Data(_) | CliError::Lib(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<ebsw::Error> for CliError {
    fn from(e: ebsw::Error) -> Self {
        CliError::Lib(e)
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    if let Command::Replay(a) = command {
        return replay(&a.manifest);
    }
    let start = Instant::now();
    let outcome = commands::run(command, true)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    if let Some(path) = command.manifest_path() {
        let manifest = RunManifest {
            command: command.name().into(),
            argv: command.argv(),
            config: command.config_json(),
            seed: command.seed(),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_ms,
            outputs: outcome.outputs,
        };
        manifest.write(&path)?;
    }
    if let Some(text) = outcome.stdout {
        println!("{text}");
    }
    Ok(())
}

fn replay(path: &std::path::Path) -> Result<(), CliError> {
    let recorded = RunManifest::read(path)?;
    let argv = std::iter::once("ebsw".to_string()).chain(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Data(format!("manifest argv does not parse: {e}")))?;
    let outcome = commands::run(&cli.command, false)?;
    let identical = outcome.outputs.values == recorded.outputs.values;
    let report = json!({
        "command": recorded.command,
        "identical": identical,
        "recorded": recorded.outputs.values,
        "replayed": outcome.outputs.values,
    });
    println!("{}", serde_json::to_string(&report).expect("JSON values always serialize"));
    if identical {
        Ok(())
    } else {
        Err(CliError::Data("replayed values differ from the manifest".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or(0) as usize;
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("ebsw: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| execute(&cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ebsw: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
