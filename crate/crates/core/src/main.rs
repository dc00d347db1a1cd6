use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fraclap::cli::{run, Command, ExitStatus, THREADS_ENV};

/// Galerkin boundary elements for the fractional Laplacian in the plane.
#[derive(Debug, Parser)]
#[command(name = "fraclap", version)]
struct Args {
    command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::ConfigError as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("could not size the thread pool: {e}");
                }
            }
            _ => {
                log::error!("{THREADS_ENV} must be a positive integer, got {v:?}");
                return ExitCode::from(ExitStatus::ConfigError as u8);
            }
        }
    }
    ExitCode::from(run(args.command, &args.config) as u8)
}
