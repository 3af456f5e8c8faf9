//! Schema and physics checks that never abort; `run` refuses configs whose
//! report has errors.

use std::fmt;

use photonbeat::bkprotocol::BKParams;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, Sweep};
use crate::experiments::{self, defaults, full_model_rates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Level {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub level: Level,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub issues: Vec<Issue>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.issues.iter().any(|i| i.level == Level::Error)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.level == Level::Error)
    }

    fn error(&mut self, field: &str, message: impl Into<String>) {
        self.issues.push(Issue { level: Level::Error, field: field.into(), message: message.into() });
    }

    fn warn(&mut self, field: &str, message: impl Into<String>) {
        self.issues.push(Issue { level: Level::Warning, field: field.into(), message: message.into() });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            let tag = match i.level {
                Level::Error => "error",
                Level::Warning => "warning",
            };
            writeln!(f, "{tag}: {}: {}", i.field, i.message)?;
        }
        Ok(())
    }
}

/// Parses and validates a config file's text.
pub fn validate_text(text: &str) -> (Option<ExperimentConfig>, Report) {
    match ExperimentConfig::from_json(text) {
        Ok(cfg) => {
            let report = validate(&cfg);
            (Some(cfg), report)
        }
        Err(e) => {
            let mut r = Report::default();
            r.error("config", e.to_string());
            (None, r)
        }
    }
}

#[derive(Clone, Copy)]
enum Sign {
    Positive,
    NonNegative,
    Any,
}

fn check_sweep(r: &mut Report, field: &str, s: &Option<Sweep>, sign: Sign) {
    let Some(s) = s else { return };
    for p in s.problems() {
        r.error(field, p);
    }
    let v = s.values();
    let bad = match sign {
        Sign::Positive => v.iter().any(|&x| !(x > 0.0)),
        Sign::NonNegative => v.iter().any(|&x| !(x >= 0.0)),
        Sign::Any => false,
    };
    if bad {
        let rule = if matches!(sign, Sign::Positive) { "> 0" } else { ">= 0" };
        r.error(field, format!("values must be {rule}"));
    }
}

fn present_fields(cfg: &ExperimentConfig) -> Vec<&'static str> {
    let p = &cfg.params;
    let mut out = Vec::new();
    let mut add = |name, on: bool| {
        if on {
            out.push(name)
        }
    };
    add("kappa_eff_over_delta", p.kappa_eff_over_delta.is_some());
    add("delta_over_kappa_eff", p.delta_over_kappa_eff.is_some());
    add("gamma_r_over_delta", p.gamma_r_over_delta.is_some());
    add("gamma_r_over_kappa_eff", p.gamma_r_over_kappa_eff.is_some());
    add("delta_over_kappa", p.delta_over_kappa.is_some());
    add("gamma_r_over_kappa", p.gamma_r_over_kappa.is_some());
    add("kappa_over_g", p.kappa_over_g.is_some());
    add("t1", p.t1.is_some());
    add("t2", p.t2.is_some());
    add("tau", p.tau.is_some());
    add("times", p.times.is_some());
    add("window", p.window.is_some());
    add("trajectories", p.trajectories.is_some());
    add("eta", p.eta.is_some());
    add("target_fidelity", p.target_fidelity.is_some());
    add("system", p.system.is_some());
    add("optical_frequency", p.optical_frequency.is_some());
    out
}

/// Largest rate (in reference units) the experiment will use.
fn largest_rate(cfg: &ExperimentConfig) -> f64 {
    let k = cfg.experiment;
    let p = &cfg.params;
    let max = |s: &Option<Sweep>, d: Sweep| s.clone().unwrap_or(d).values().into_iter().map(f64::abs).fold(0.0, f64::max);
    let mut rates = vec![1.0];
    match k {
        ExperimentKind::BkBad | ExperimentKind::BkAverage => {
            let kd = p.kappa_eff_over_delta.clone().unwrap_or(defaults::kappa_eff_over_delta(k)).values();
            let dmax = kd.iter().map(|x| 1.0 / x).fold(0.0, f64::max);
            rates.push(dmax);
            if k == ExperimentKind::BkAverage {
                rates.push(dmax * max(&p.gamma_r_over_delta, defaults::gamma_r_over_delta(k)));
            }
        }
        ExperimentKind::BkFullValidate => {
            let r = max(&p.kappa_over_g, Sweep::Values(vec![1.0]));
            rates.push(full_model_rates(r).1);
            rates.push(max(&p.delta_over_kappa_eff, defaults::delta_over_kappa_eff(k)));
        }
        ExperimentKind::BkIdeal | ExperimentKind::BkConditional | ExperimentKind::McOracle => {
            rates.push(max(&p.delta_over_kappa_eff, defaults::delta_over_kappa_eff(k)));
            rates.push(p.gamma_r_over_kappa_eff.unwrap_or(defaults::GAMMA_R_OVER_KAPPA_EFF));
            if k == ExperimentKind::McOracle {
                rates.push(max(&p.delta_over_kappa, defaults::delta_over_kappa(k)));
                rates.push(max(&p.gamma_r_over_kappa, defaults::gamma_r_over_kappa(k)));
            }
        }
        ExperimentKind::HomBeat | ExperimentKind::HomCoalescence | ExperimentKind::HomInterval => {
            rates.push(max(&p.delta_over_kappa, defaults::delta_over_kappa(k)));
            rates.push(max(&p.gamma_r_over_kappa, defaults::gamma_r_over_kappa(k)));
        }
        ExperimentKind::HomVisibility => {
            let d = max(&p.delta_over_kappa, defaults::delta_over_kappa(k));
            rates.push(d);
            rates.push(d * max(&p.gamma_r_over_delta, defaults::gamma_r_over_delta(k)));
        }
    }
    rates.into_iter().fold(0.0, f64::max)
}

pub fn validate(cfg: &ExperimentConfig) -> Report {
    let mut r = Report::default();
    let kind = cfg.experiment;
    let p = &cfg.params;

    let used = experiments::used_fields(kind);
    for f in present_fields(cfg) {
        if !used.contains(&f) {
            r.warn(f, format!("not used by {kind}"));
        }
    }

    check_sweep(&mut r, "kappa_eff_over_delta", &p.kappa_eff_over_delta, Sign::Positive);
    check_sweep(&mut r, "delta_over_kappa_eff", &p.delta_over_kappa_eff, Sign::Any);
    check_sweep(&mut r, "gamma_r_over_delta", &p.gamma_r_over_delta, Sign::Positive);
    check_sweep(&mut r, "delta_over_kappa", &p.delta_over_kappa, Sign::Any);
    check_sweep(&mut r, "gamma_r_over_kappa", &p.gamma_r_over_kappa, Sign::Positive);
    check_sweep(&mut r, "kappa_over_g", &p.kappa_over_g, Sign::Positive);
    check_sweep(&mut r, "t1", &p.t1, Sign::NonNegative);
    check_sweep(&mut r, "t2", &p.t2, Sign::NonNegative);
    check_sweep(&mut r, "tau", &p.tau, Sign::NonNegative);
    check_sweep(&mut r, "times", &p.times, Sign::NonNegative);
    for (field, s) in [("tau", &p.tau), ("times", &p.times)] {
        if let Some(s) = s {
            if s.values().windows(2).any(|w| w[1] < w[0]) {
                r.error(field, "values must be nondecreasing");
            }
        }
    }

    if let Some(g) = p.gamma_r_over_kappa_eff {
        if !(g > 0.0 && g.is_finite()) {
            r.error("gamma_r_over_kappa_eff", "must be a finite value > 0");
        }
    }
    if let Some(w) = p.window {
        if !(w > 0.0 && w.is_finite()) {
            r.error("window", "must be a finite value > 0");
        }
    }
    if let Some(eta) = p.eta {
        if !(0.0..=1.0).contains(&eta) {
            r.error("eta", "collection efficiency must lie in [0, 1]");
        }
    }
    if let Some(f) = p.target_fidelity {
        if !(f > 0.5 && f < 1.0) {
            r.error("target_fidelity", "must lie in (0.5, 1)");
        }
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            r.error("threads", "must be >= 1");
        }
    }
    let tol = &cfg.tolerances;
    for (field, v) in [("tolerances.ode_rtol", tol.ode_rtol), ("tolerances.ode_atol", tol.ode_atol), ("tolerances.quad_rtol", tol.quad_rtol)] {
        if !(v > 0.0 && v < 1.0) {
            r.error(field, "must lie in (0, 1)");
        }
    }

    let trajectories = p.trajectories.unwrap_or(defaults::trajectories(kind));
    if matches!(kind, ExperimentKind::BkIdeal | ExperimentKind::McOracle) && trajectories == 0 {
        r.error("trajectories", format!("{kind} needs at least one trajectory"));
    }
    if experiments::needs_seed(cfg) && cfg.seed.is_none() {
        r.error("seed", format!("{kind} draws random numbers with these parameters and needs a seed"));
    }

    if kind == ExperimentKind::BkFullValidate {
        match &p.kappa_over_g {
            None => r.error("kappa_over_g", "bk-full-validate needs the full-model coupling ratio kappa/g (g and kappa)"),
            Some(s) => {
                for x in s.values().into_iter().filter(|&x| x > 0.0) {
                    let (g, kappa) = full_model_rates(x);
                    for w in BKParams::full(g, kappa, 0.0, 1.0).warnings() {
                        r.warn("kappa_over_g", format!("{x}: {w}"));
                    }
                }
            }
        }
    }

    if let Some(w) = p.optical_frequency {
        if !(w > 0.0) {
            r.error("optical_frequency", "must be > 0");
        } else {
            let rate = largest_rate(cfg);
            if rate >= 1e-2 * w {
                r.warn(
                    "optical_frequency",
                    format!("largest rate {rate:.3e} is not small against the optical frequency {w:.3e}; the rotating-frame treatment needs 1/omega << detector response time"),
                );
            }
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_clean() {
        for kind in ExperimentKind::ALL {
            let mut cfg = ExperimentConfig::new(kind);
            cfg.seed = Some(1);
            if kind == ExperimentKind::BkFullValidate {
                cfg.params.kappa_over_g = Some(Sweep::Values(vec![50.0]));
            }
            assert!(validate(&cfg).is_empty(), "{kind}: {}", validate(&cfg));
        }
    }

    #[test]
    fn empty_range_is_an_error() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::BkBad);
        cfg.params.kappa_eff_over_delta = Some(Sweep::Values(vec![]));
        assert!(validate(&cfg).has_errors());
        cfg.params.kappa_eff_over_delta = Some(Sweep::range(1.0, 2.0, 1, false));
        assert!(validate(&cfg).has_errors());
    }

    #[test]
    fn full_model_needs_couplings() {
        let cfg = ExperimentConfig::new(ExperimentKind::BkFullValidate);
        let report = validate(&cfg);
        assert!(report.errors().any(|i| i.field == "kappa_over_g"));
    }

    #[test]
    fn monte_carlo_needs_seed() {
        let cfg = ExperimentConfig::new(ExperimentKind::McOracle);
        assert!(validate(&cfg).errors().any(|i| i.field == "seed"));
    }

    #[test]
    fn optical_scale_warning() {
        let mut cfg = ExperimentConfig::new(ExperimentKind::HomVisibility);
        cfg.params.optical_frequency = Some(1e4);
        let report = validate(&cfg);
        assert!(!report.has_errors());
        assert!(report.issues.iter().any(|i| i.field == "optical_frequency"));
    }

    #[test]
    fn unknown_fields_are_reported() {
        let (cfg, report) = validate_text(r#"{"experiment": "bk-bad", "params": {"kappa": 1}}"#);
        assert!(cfg.is_none() && report.has_errors());
    }
}
