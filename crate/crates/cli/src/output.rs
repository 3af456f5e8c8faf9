//! CSV tables and JSON sidecars.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
}

impl Cell {
    /// Reals use 17 significant digits, enough to round-trip any double.
    pub fn render(&self) -> String {
        match *self {
            Cell::Real(x) => format!("{x:.16e}"),
            Cell::Int(n) => n.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<Cell>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        Ok(w.into_inner()?)
    }
}

/// Metadata written next to every CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub experiment: String,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub config: &'a ExperimentConfig,
    pub csv: String,
    pub columns: &'a [String],
    pub rows: usize,
    /// The input grids actually evaluated, by parameter name.
    pub grids: &'a BTreeMap<String, Vec<f64>>,
    /// Experiment-specific results, including tail-error estimates.
    pub summary: &'a serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

pub fn write_outputs(dir: &Path, stem: &str, table: &Table, sidecar: &Sidecar) -> Result<Written> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    fs::write(&csv, table.to_csv()?).with_context(|| format!("cannot write {}", csv.display()))?;
    let mut text = serde_json::to_string_pretty(sidecar)?;
    text.push('\n');
    fs::write(&json, text).with_context(|| format!("cannot write {}", json.display()))?;
    Ok(Written { csv, sidecar: json })
}
