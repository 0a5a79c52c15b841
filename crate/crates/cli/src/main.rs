use std::path::PathBuf;
use std::process::ExitCode;

use causvol_cli::simulate::{simulate, DgpSpec};
use causvol_cli::{ConfigError, LoadedConfig, RunError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "causvol", version, about = "Volatility models and causality-in-quantiles tests for monthly commodity returns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured stage and write tables plus a manifest.
    Run {
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a config without computing anything.
    Validate { config: PathBuf },
    /// Simulate a GARCH or SV series from a TOML description.
    Simulate {
        dgp: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match LoadedConfig::from_path(&config) {
            Ok(lc) => {
                println!("ok {}", lc.config.hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e.into()),
        },
        Command::Run { config, out } => {
            let lc = match LoadedConfig::from_path(&config) {
                Ok(lc) => lc,
                Err(e) => return fail(&e.into()),
            };
            match causvol_cli::run(&lc, out.as_deref()) {
                Ok(outcome) => {
                    let dir = outcome.output_dir.display().to_string();
                    for e in &outcome.errors {
                        eprintln!("stage {} failed: {}", e.stage, e.message);
                    }
                    let n = outcome.manifest.tables.len();
                    match outcome.into_result() {
                        Ok(_) => {
                            println!("{n} tables written to {dir}");
                            ExitCode::SUCCESS
                        }
                        Err(e) => fail(&e),
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Simulate { dgp, out } => {
            let text = match std::fs::read_to_string(&dgp) {
                Ok(t) => t,
                Err(e) => {
                    return fail(&RunError::Config(ConfigError::Read {
                        path: dgp.display().to_string(),
                        message: e.to_string(),
                    }))
                }
            };
            let csv = match DgpSpec::from_toml(&text).and_then(|d| simulate(&d)) {
                Ok(c) => c,
                Err(e) => return fail(&e.into()),
            };
            match out {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, csv) {
                        return fail(&RunError::Io {
                            path: p.display().to_string(),
                            message: e.to_string(),
                        });
                    }
                }
                None => print!("{csv}"),
            }
            ExitCode::SUCCESS
        }
    }
}
