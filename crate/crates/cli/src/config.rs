//! Experiment configuration files.
//!
//! Rates are dimensionless: Barrett-Kok experiments measure everything in
//! units of `kappa_eff`, Hong-Ou-Mandel experiments in units of `kappa`, so
//! the reference rate is always 1.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    BkIdeal,
    BkBad,
    BkAverage,
    BkConditional,
    BkFullValidate,
    HomBeat,
    HomCoalescence,
    HomInterval,
    HomVisibility,
    McOracle,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::BkIdeal,
        ExperimentKind::BkBad,
        ExperimentKind::BkAverage,
        ExperimentKind::BkConditional,
        ExperimentKind::BkFullValidate,
        ExperimentKind::HomBeat,
        ExperimentKind::HomCoalescence,
        ExperimentKind::HomInterval,
        ExperimentKind::HomVisibility,
        ExperimentKind::McOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::BkIdeal => "bk-ideal",
            ExperimentKind::BkBad => "bk-bad",
            ExperimentKind::BkAverage => "bk-average",
            ExperimentKind::BkConditional => "bk-conditional",
            ExperimentKind::BkFullValidate => "bk-full-validate",
            ExperimentKind::HomBeat => "hom-beat",
            ExperimentKind::HomCoalescence => "hom-coalescence",
            ExperimentKind::HomInterval => "hom-interval",
            ExperimentKind::HomVisibility => "hom-visibility",
            ExperimentKind::McOracle => "mc-oracle",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid of values: an explicit list, or `n` points from `start` to `stop`
/// (geometric when `log` is set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        n: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Sweep {
    pub fn range(start: f64, stop: f64, n: usize, log: bool) -> Self {
        Sweep::Range { start, stop, n, log }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::Values(v) => v.clone(),
            Sweep::Range { start, stop, n, log } => photonbeat::stats::grid(*start, *stop, *n, *log),
        }
    }

    /// Problems with the grid definition, if any.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Sweep::Values(v) => {
                if v.is_empty() {
                    out.push("empty value list".to_string());
                }
                if v.iter().any(|x| !x.is_finite()) {
                    out.push("non-finite value".to_string());
                }
            }
            Sweep::Range { start, stop, n, log } => {
                if *n < 2 {
                    out.push(format!("range needs n >= 2, got {n}"));
                }
                if !start.is_finite() || !stop.is_finite() {
                    out.push("non-finite range bound".to_string());
                }
                if *log && !(*start > 0.0 && *stop > 0.0) {
                    out.push("log range bounds must be > 0".to_string());
                }
            }
        }
        out
    }
}

/// Which system the trajectory oracle exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleSystem {
    /// First observed click per port in one Barrett-Kok round.
    Bk,
    /// Interval distribution after a first click at the plus port.
    Hom,
}

/// Experiment parameters. Each experiment reads the fields it needs and
/// falls back to the defaults listed in the README.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_eff_over_delta: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_over_kappa_eff: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_r_over_delta: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_r_over_kappa_eff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_over_kappa: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_r_over_kappa: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_over_g: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Sweep>,
    /// First-click window for interval distributions, in units of `1/kappa`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<OracleSystem>,
    /// Optical carrier frequency in reference units, used only for the
    /// regime check in `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Integrator tolerances for systems built by `bk-full-validate` and
    /// `mc-oracle`.
    #[serde(default = "default_rtol")]
    pub ode_rtol: f64,
    #[serde(default = "default_atol")]
    pub ode_atol: f64,
    /// Relative tolerance of the `bk-average` quadrature.
    #[serde(default = "default_quad_rtol")]
    pub quad_rtol: f64,
}

fn default_rtol() -> f64 {
    1e-9
}

fn default_atol() -> f64 {
    1e-12
}

fn default_quad_rtol() -> f64 {
    1e-9
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ode_rtol: default_rtol(), ode_atol: default_atol(), quad_rtol: default_quad_rtol() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Output directory; relative paths resolve against the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// File stem for the CSV and sidecar; defaults to the experiment name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: None,
            out_dir: None,
            name: None,
            threads: None,
            params: Params::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn stem(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn ode_options(&self) -> photonbeat::ode::OdeOptions {
        photonbeat::ode::OdeOptions {
            rtol: self.tolerances.ode_rtol,
            atol: self.tolerances.ode_atol,
            ..Default::default()
        }
    }
}
