//! Experiment runner: parameter sweeps, CSV tables and JSON sidecars.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

pub use config::{ExperimentConfig, ExperimentKind, Sweep};
pub use experiments::Outcome;
pub use output::{Cell, Table, Written};
pub use validate::Report;

pub const THREADS_ENV: &str = "PHOTONBEAT_THREADS";

/// Worker count from the config, else from `PHOTONBEAT_THREADS`; `None`
/// leaves the choice to rayon.
pub fn thread_count(cfg: &ExperimentConfig) -> Result<Option<usize>> {
    if let Some(n) = cfg.threads {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Result of a completed `run`.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub outcome: Outcome,
    pub written: Written,
    pub warnings: Vec<String>,
}

/// Validates, evaluates on a dedicated pool and writes the CSV and sidecar.
pub fn run(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let report = validate::validate(cfg);
    if report.has_errors() {
        bail!("invalid config:\n{report}");
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cfg)? {
        if n == 0 {
            bail!("thread count must be >= 1");
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build()?;
    let outcome = pool.install(|| experiments::execute(cfg))?;
    let stem = cfg.stem();
    let sidecar = output::Sidecar {
        experiment: cfg.experiment.to_string(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        csv: format!("{stem}.csv"),
        columns: &outcome.table.columns,
        rows: outcome.table.rows.len(),
        grids: &outcome.grids,
        summary: &outcome.summary,
    };
    let dir: PathBuf = cfg.out_dir();
    let written = output::write_outputs(&dir, &stem, &outcome.table, &sidecar)?;
    let warnings = report.issues.iter().map(|i| format!("{}: {}", i.field, i.message)).collect();
    Ok(SweepResult { outcome, written, warnings })
}
