use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use photonbeat_cli::{validate, ExperimentConfig};

#[derive(Parser)]
#[command(name = "photonbeat", version, about = "Few-photon interference experiments: sweeps to CSV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `out_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; falls back to PHOTONBEAT_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config and print the problems found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, threads } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            if out.is_some() {
                cfg.out_dir = out;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            if threads.is_some() {
                cfg.threads = threads;
            }
            match photonbeat_cli::run(&cfg) {
                Ok(res) => {
                    for w in &res.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("{} rows -> {}", res.outcome.table.rows.len(), res.written.csv.display());
                    println!("sidecar -> {}", res.written.sidecar.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => {
            let report = match std::fs::read_to_string(&config) {
                Ok(text) => validate::validate_text(&text).1,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::FAILURE;
                }
            };
            if report.is_empty() {
                println!("ok");
            } else {
                print!("{report}");
            }
            ExitCode::SUCCESS
        }
    }
}
