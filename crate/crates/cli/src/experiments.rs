//! The experiments behind each `run` configuration.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use anyhow::{anyhow, bail, Result};
use photonbeat::bkprotocol::{self as bk, BKParams, ClickOutcome, Detectors};
use photonbeat::detector::{DetectorBankState, Port};
use photonbeat::dynamics::first_click_cdf;
use photonbeat::hom::{self, HOMParams};
use photonbeat::quad::QuadOptions;
use photonbeat::stats;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ExperimentKind, OracleSystem, Sweep};
use crate::oracle;
use crate::output::{Cell, Table};

/// Table plus sidecar content produced by one experiment.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    pub grids: BTreeMap<String, Vec<f64>>,
    pub summary: Map<String, Value>,
}

impl Outcome {
    fn new(table: Table) -> Self {
        Self { table, grids: BTreeMap::new(), summary: Map::new() }
    }

    fn grid(&mut self, name: &str, values: &[f64]) {
        self.grids.insert(name.to_string(), values.to_vec());
    }
}

/// Parameter fields each experiment reads.
pub fn used_fields(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::BkIdeal => &["delta_over_kappa_eff", "trajectories", "eta", "optical_frequency"],
        ExperimentKind::BkBad => &["kappa_eff_over_delta", "eta", "optical_frequency"],
        ExperimentKind::BkAverage => &["kappa_eff_over_delta", "gamma_r_over_delta", "target_fidelity", "optical_frequency"],
        ExperimentKind::BkConditional => &["delta_over_kappa_eff", "gamma_r_over_kappa_eff", "t1", "t2", "optical_frequency"],
        ExperimentKind::BkFullValidate => &["kappa_over_g", "delta_over_kappa_eff", "times", "trajectories", "optical_frequency"],
        ExperimentKind::HomBeat => &["delta_over_kappa", "tau", "optical_frequency"],
        ExperimentKind::HomCoalescence => &["delta_over_kappa", "trajectories", "optical_frequency"],
        ExperimentKind::HomInterval => &["delta_over_kappa", "gamma_r_over_kappa", "tau", "window", "optical_frequency"],
        ExperimentKind::HomVisibility => &["delta_over_kappa", "gamma_r_over_delta", "tau", "optical_frequency"],
        ExperimentKind::McOracle => &[
            "system",
            "delta_over_kappa_eff",
            "gamma_r_over_kappa_eff",
            "delta_over_kappa",
            "gamma_r_over_kappa",
            "times",
            "window",
            "trajectories",
            "optical_frequency",
        ],
    }
}

/// Whether the experiment draws random numbers with these parameters.
pub fn needs_seed(cfg: &ExperimentConfig) -> bool {
    match cfg.experiment {
        ExperimentKind::BkIdeal | ExperimentKind::McOracle => true,
        ExperimentKind::BkFullValidate | ExperimentKind::HomCoalescence => cfg.params.trajectories.unwrap_or(0) > 0,
        _ => false,
    }
}

pub mod defaults {
    use super::*;

    pub fn kappa_eff_over_delta(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::BkAverage => Sweep::Values(vec![1.0, 10.0]),
            _ => Sweep::range(0.1, 100.0, 61, true),
        }
    }

    pub fn delta_over_kappa_eff(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::BkIdeal => Sweep::Values(vec![0.0, 0.5, 1.0, 2.0]),
            ExperimentKind::BkFullValidate => Sweep::Values(vec![0.0]),
            _ => Sweep::Values(vec![1.0]),
        }
    }

    pub fn gamma_r_over_delta(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::HomVisibility => Sweep::range(0.01, 1000.0, 26, true),
            _ => Sweep::range(0.1, 100.0, 31, true),
        }
    }

    pub fn delta_over_kappa(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::HomBeat => Sweep::Values(vec![4.0 * PI, 0.5 * PI]),
            ExperimentKind::HomCoalescence => Sweep::range(0.0, 10.0, 101, false),
            ExperimentKind::McOracle => Sweep::Values(vec![PI]),
            _ => Sweep::Values(vec![20.0 * PI]),
        }
    }

    pub fn gamma_r_over_kappa(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::McOracle => Sweep::Values(vec![5.0]),
            _ => Sweep::Values(vec![20.0, 100.0]),
        }
    }

    pub fn tau(kind: ExperimentKind) -> Sweep {
        match kind {
            ExperimentKind::HomInterval => Sweep::range(0.0, 1.0, 401, false),
            _ => Sweep::range(0.0, 5.0, 501, false),
        }
    }

    pub fn times(_kind: ExperimentKind) -> Sweep {
        Sweep::range(0.0, 10.0, 201, false)
    }

    pub fn click_times() -> Sweep {
        Sweep::range(0.0, 5.0, 51, false)
    }

    pub fn trajectories(kind: ExperimentKind) -> usize {
        match kind {
            ExperimentKind::BkIdeal => 2000,
            ExperimentKind::McOracle => 100_000,
            _ => 0,
        }
    }

    pub const WINDOW: f64 = 3.0;
    pub const TARGET_FIDELITY: f64 = 0.99;
    pub const GAMMA_R_OVER_KAPPA_EFF: f64 = 1.0;
    /// Duration of one protocol round for `bk-ideal`, in units of `1/kappa_eff`.
    pub const ROUND_TIME: f64 = 40.0;
}

fn sweep(field: &Option<Sweep>, default: Sweep) -> Vec<f64> {
    field.clone().unwrap_or(default).values()
}

fn seed(cfg: &ExperimentConfig) -> Result<u64> {
    cfg.seed.ok_or_else(|| anyhow!("{} needs a seed", cfg.experiment))
}

fn pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

fn reals(xs: &[f64]) -> Vec<Cell> {
    xs.iter().map(|&x| Cell::Real(x)).collect()
}

/// Runs the experiment on the current rayon pool; files are not written.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        ExperimentKind::BkIdeal => bk_ideal(cfg),
        ExperimentKind::BkBad => bk_bad(cfg),
        ExperimentKind::BkAverage => bk_average(cfg),
        ExperimentKind::BkConditional => bk_conditional(cfg),
        ExperimentKind::BkFullValidate => bk_full_validate(cfg),
        ExperimentKind::HomBeat => hom_beat(cfg),
        ExperimentKind::HomCoalescence => hom_coalescence(cfg),
        ExperimentKind::HomInterval => hom_interval(cfg),
        ExperimentKind::HomVisibility => hom_visibility(cfg),
        ExperimentKind::McOracle => mc_oracle(cfg),
    }
}

fn bk_bad(cfg: &ExperimentConfig) -> Result<Outcome> {
    let ratios = sweep(&cfg.params.kappa_eff_over_delta, defaults::kappa_eff_over_delta(cfg.experiment));
    let rows: Vec<Vec<f64>> = ratios
        .par_iter()
        .map(|&r| {
            let p = BKParams::new(1.0, 1.0 / r, 0.0);
            let f = bk::bad_limit_fidelity(&p)?;
            let c = bk::bad_limit_first_round_state(&p)?.get(1, 2).norm();
            Ok(vec![r, 1.0 / r, f, c])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["kappa_eff_over_delta", "delta_over_kappa_eff", "fidelity", "first_round_coherence"]);
    rows.iter().for_each(|r| table.push(reals(r)));
    let mut out = Outcome::new(table);
    out.grid("kappa_eff_over_delta", &ratios);
    let eta = cfg.params.eta.unwrap_or(1.0);
    out.summary.insert("success_probability".into(), json!(bk::success_probability(&BKParams { eta, ..BKParams::new(1.0, 0.0, 0.0) })));
    out.summary.insert("tail_error".into(), json!(0.0));
    Ok(out)
}

fn bk_ideal(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = seed(cfg)?;
    let deltas = sweep(&cfg.params.delta_over_kappa_eff, defaults::delta_over_kappa_eff(cfg.experiment));
    let runs = cfg.params.trajectories.unwrap_or(defaults::trajectories(cfg.experiment));
    let eta = cfg.params.eta.unwrap_or(1.0);
    let mut table = Table::new(&[
        "delta_over_kappa_eff",
        "runs",
        "heralded",
        "heralded_fraction",
        "heralded_stderr",
        "success_probability",
        "min_corrected_fidelity",
        "mean_raw_fidelity",
        "max_leakage",
    ]);
    for (row, &d) in deltas.iter().enumerate() {
        let p = BKParams { eta, ..BKParams::new(1.0, d, 1.0) };
        let sys = bk::build_effective_system(&p)?;
        let first = (row * runs) as u64;
        let results: Vec<Option<(f64, f64, f64)>> = (first..first + runs as u64)
            .into_par_iter()
            .map(|k| {
                let run = bk::simulate_protocol(&sys, Detectors::Ideal, defaults::ROUND_TIME, seed, k)?;
                Ok(match (run.outcome, run.final_state) {
                    (Some(o), Some(psi)) => {
                        let target = bk::target_state(o.m);
                        let raw = psi.fidelity(&target)?;
                        let fixed = bk::phase_correction(&psi, &o, d)?.fidelity(&target)?;
                        Some((raw, fixed, run.leakage))
                    }
                    _ => None,
                })
            })
            .collect::<Result<_>>()?;
        let heralded: Vec<(f64, f64, f64)> = results.into_iter().flatten().collect();
        let (frac, se) = stats::proportion(heralded.len(), runs);
        let min_fixed = heralded.iter().map(|h| h.1).fold(f64::INFINITY, f64::min);
        let mean_raw = heralded.iter().map(|h| h.0).sum::<f64>() / heralded.len().max(1) as f64;
        let leak = heralded.iter().map(|h| h.2).fold(0.0, f64::max);
        table.push(vec![
            Cell::Real(d),
            Cell::Int(runs as u64),
            Cell::Int(heralded.len() as u64),
            Cell::Real(frac),
            Cell::Real(se),
            Cell::Real(bk::success_probability(&p)),
            Cell::Real(min_fixed),
            Cell::Real(mean_raw),
            Cell::Real(leak),
        ]);
    }
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa_eff", &deltas);
    out.summary.insert("round_time".into(), json!(defaults::ROUND_TIME));
    out.summary.insert("tail_error".into(), json!((-defaults::ROUND_TIME).exp()));
    Ok(out)
}

fn bk_average(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kd = sweep(&cfg.params.kappa_eff_over_delta, defaults::kappa_eff_over_delta(cfg.experiment));
    let gd = sweep(&cfg.params.gamma_r_over_delta, defaults::gamma_r_over_delta(cfg.experiment));
    let target = cfg.params.target_fidelity.unwrap_or(defaults::TARGET_FIDELITY);
    let opts = QuadOptions { abs_tol: 1e-11, rel_tol: cfg.tolerances.quad_rtol, max_intervals: 4000 };
    let grid = pairs(&kd, &gd);
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&(k_over_d, g_over_d)| {
            let delta = 1.0 / k_over_d;
            let gamma = g_over_d * delta;
            let p = BKParams::new(1.0, delta, gamma);
            let f = bk::average_fidelity_with(&p, opts)?;
            Ok(vec![
                k_over_d,
                g_over_d,
                1.0 / g_over_d,
                gamma,
                f.value,
                bk::bad_limit_fidelity(&p)?,
                f.tail_bound + f.quad_error,
            ])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "kappa_eff_over_delta",
        "gamma_r_over_delta",
        "delta_over_gamma_r",
        "gamma_r_over_kappa_eff",
        "avg_fidelity",
        "bad_limit_fidelity",
        "tail_error",
    ]);
    rows.iter().for_each(|r| table.push(reals(r)));
    let thresholds: Vec<Value> = kd
        .par_iter()
        .map(|&k_over_d| {
            let delta = 1.0 / k_over_d;
            let g = bk::detector_rate_for_fidelity(1.0, delta, target)?;
            Ok(json!({ "kappa_eff_over_delta": k_over_d, "gamma_r_over_delta": g / delta }))
        })
        .collect::<Result<_>>()?;
    let max_tail = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    let mut out = Outcome::new(table);
    out.grid("kappa_eff_over_delta", &kd);
    out.grid("gamma_r_over_delta", &gd);
    out.summary.insert("target_fidelity".into(), json!(target));
    out.summary.insert("threshold".into(), Value::Array(thresholds));
    out.summary.insert("tail_error".into(), json!(max_tail));
    Ok(out)
}

fn bk_conditional(cfg: &ExperimentConfig) -> Result<Outcome> {
    let deltas = sweep(&cfg.params.delta_over_kappa_eff, defaults::delta_over_kappa_eff(cfg.experiment));
    let g = cfg.params.gamma_r_over_kappa_eff.unwrap_or(defaults::GAMMA_R_OVER_KAPPA_EFF);
    let t1 = sweep(&cfg.params.t1, defaults::click_times());
    let t2 = sweep(&cfg.params.t2, defaults::click_times());
    let cells: Vec<(f64, (f64, f64))> = deltas.iter().flat_map(|&d| pairs(&t1, &t2).into_iter().map(move |t| (d, t))).collect();
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(d, (a, b))| {
            let p = BKParams::new(1.0, d, g);
            let o = ClickOutcome::new(a, b, 0);
            let rho = bk::intermediate_rho(&o, &p)?;
            let weight = g * g * rho.trace();
            let phase = if rho.get(1, 2).norm() > 0.0 { bk::optimal_phase(&rho) } else { 0.0 };
            Ok(vec![d, g, a, b, weight, bk::conditional_fidelity(&o, &p)?, phase, -bk::wrapped_phase(&o, d)])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "delta_over_kappa_eff",
        "gamma_r_over_kappa_eff",
        "t1",
        "t2",
        "click_weight",
        "conditional_fidelity",
        "optimal_phase",
        "ideal_phase",
    ]);
    rows.iter().for_each(|r| table.push(reals(r)));
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa_eff", &deltas);
    out.grid("t1", &t1);
    out.grid("t2", &t2);
    out.summary.insert("tail_error".into(), json!(0.0));
    Ok(out)
}

/// Couplings with `kappa_eff = 4 g^2 / kappa = 1` for a given `kappa / g`.
pub fn full_model_rates(kappa_over_g: f64) -> (f64, f64) {
    let g = kappa_over_g / 4.0;
    (g, kappa_over_g * g)
}

fn bk_full_validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let Some(ratio_sweep) = &cfg.params.kappa_over_g else {
        bail!("bk-full-validate needs kappa_over_g");
    };
    let ratios = ratio_sweep.values();
    let deltas = sweep(&cfg.params.delta_over_kappa_eff, defaults::delta_over_kappa_eff(cfg.experiment));
    let times = sweep(&cfg.params.times, defaults::times(cfg.experiment));
    let n = cfg.params.trajectories.unwrap_or(0);
    let t_end = times.iter().copied().fold(0.0, f64::max);
    let fine = stats::grid(0.0, t_end, 2001, false);
    let mut table = Table::new(&["kappa_over_g", "delta_over_kappa_eff", "t", "cdf_full", "cdf_effective", "abs_diff"]);
    let mut checks = Vec::new();
    for (r, d) in pairs(&ratios, &deltas) {
        let (g, kappa) = full_model_rates(r);
        let full = bk::build_full_system(&BKParams::full(g, kappa, d, 1.0))?.with_ode_options(cfg.ode_options());
        let eff = bk::build_effective_system(&BKParams::new(1.0, d, 1.0))?.with_ode_options(cfg.ode_options());
        let psi_full = bk::round_start_state(full.space());
        let psi_eff = bk::round_start_state(eff.space());
        let (cf, ce) = rayon::join(|| first_click_cdf(&full, &psi_full, &times), || first_click_cdf(&eff, &psi_eff, &times));
        let (cf, ce) = (cf?, ce?);
        for ((&t, &a), &b) in times.iter().zip(&cf).zip(&ce) {
            table.push(reals(&[r, d, t, a, b, (a - b).abs()]));
        }
        let (ff, fe) = rayon::join(|| first_click_cdf(&full, &psi_full, &fine), || first_click_cdf(&eff, &psi_eff, &fine));
        let (ff, fe) = (ff?, fe?);
        let sup = ff.iter().zip(&fe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut check = json!({ "kappa_over_g": r, "delta_over_kappa_eff": d, "sup_cdf_difference": sup });
        if n > 0 {
            let samples = oracle::first_click_times(&full, &psi_full, t_end, n, seed(cfg)?)?;
            let ks = stats::ks_distance(&samples, n, |t| oracle::interpolate(&fine, &fe, t));
            check["trajectories"] = json!(n);
            check["mc_ks_full_vs_effective"] = json!(ks);
        }
        checks.push(check);
    }
    let mut out = Outcome::new(table);
    out.grid("kappa_over_g", &ratios);
    out.grid("delta_over_kappa_eff", &deltas);
    out.grid("times", &times);
    out.summary.insert("checks".into(), Value::Array(checks));
    out.summary.insert("tail_error".into(), json!(0.0));
    Ok(out)
}

fn hom_beat(cfg: &ExperimentConfig) -> Result<Outcome> {
    let deltas = sweep(&cfg.params.delta_over_kappa, defaults::delta_over_kappa(cfg.experiment));
    let taus = sweep(&cfg.params.tau, defaults::tau(cfg.experiment));
    let mut table = Table::new(&["delta_over_kappa", "tau", "p_same", "p_other", "cdf_same", "cdf_other"]);
    for &d in &deltas {
        let p = HOMParams::new(1.0, d, 1.0);
        p.check()?;
        for &t in &taus {
            table.push(reals(&[
                d,
                t,
                hom::ideal_conditional_density(&p, t, true),
                hom::ideal_conditional_density(&p, t, false),
                hom::ideal_interval_cdf(&p, t, true),
                hom::ideal_interval_cdf(&p, t, false),
            ]));
        }
    }
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa", &deltas);
    out.grid("tau", &taus);
    out.summary.insert("tail_error".into(), json!(0.0));
    Ok(out)
}

fn hom_coalescence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let deltas = sweep(&cfg.params.delta_over_kappa, defaults::delta_over_kappa(cfg.experiment));
    let n = cfg.params.trajectories.unwrap_or(0);
    let seed = if n > 0 { seed(cfg)? } else { 0 };
    let rows: Vec<Vec<f64>> = deltas
        .par_iter()
        .map(|&d| {
            let p = HOMParams::new(1.0, d, 1.0);
            let mut row = vec![d, hom::bad_limit_coalescence(&p)?];
            if n > 0 {
                let (f, se) = hom::sample_same_detector_fraction(&p, n, seed)?;
                row.extend([f, se]);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut columns = vec!["delta_over_kappa", "coalescence"];
    if n > 0 {
        columns.extend(["mc_same_fraction", "mc_stderr"]);
    }
    let mut table = Table::new(&columns);
    rows.iter().for_each(|r| table.push(reals(r)));
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa", &deltas);
    out.summary.insert("tail_error".into(), json!(0.0));
    Ok(out)
}

fn hom_interval(cfg: &ExperimentConfig) -> Result<Outcome> {
    let deltas = sweep(&cfg.params.delta_over_kappa, defaults::delta_over_kappa(cfg.experiment));
    let gammas = sweep(&cfg.params.gamma_r_over_kappa, defaults::gamma_r_over_kappa(cfg.experiment));
    let taus = sweep(&cfg.params.tau, defaults::tau(cfg.experiment));
    let window = cfg.params.window.unwrap_or(defaults::WINDOW);
    let cells = pairs(&deltas, &gammas);
    let dists = cells
        .par_iter()
        .map(|&(d, g)| Ok(hom::interval_distribution(&HOMParams::new(1.0, d, g), &taus, Port::Plus, Some(window))?))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&[
        "delta_over_kappa",
        "gamma_r_over_kappa",
        "tau",
        "p_same",
        "p_other",
        "ideal_same",
        "ideal_other",
        "cdf_same",
        "cdf_other",
    ]);
    let mut tails = Vec::new();
    for (&(d, g), dist) in cells.iter().zip(&dists) {
        let p = HOMParams::new(1.0, d, g);
        for (k, &t) in taus.iter().enumerate() {
            table.push(reals(&[
                d,
                g,
                t,
                dist.density(Port::Plus)[k],
                dist.density(Port::Minus)[k],
                hom::ideal_conditional_density(&p, t, true),
                hom::ideal_conditional_density(&p, t, false),
                dist.cdf(Port::Plus)[k],
                dist.cdf(Port::Minus)[k],
            ]));
        }
        tails.push(json!({
            "delta_over_kappa": d,
            "gamma_r_over_kappa": g,
            "tail_fraction": dist.tail_fraction,
            "first_click_weight": dist.first_click_weight,
        }));
    }
    let max_tail = dists.iter().map(|d| d.tail_fraction).fold(0.0, f64::max);
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa", &deltas);
    out.grid("gamma_r_over_kappa", &gammas);
    out.grid("tau", &taus);
    out.summary.insert("window".into(), json!(window));
    out.summary.insert("windows".into(), Value::Array(tails));
    out.summary.insert("tail_error".into(), json!(max_tail));
    Ok(out)
}

fn hom_visibility(cfg: &ExperimentConfig) -> Result<Outcome> {
    let deltas = sweep(&cfg.params.delta_over_kappa, defaults::delta_over_kappa(cfg.experiment));
    let ratios = sweep(&cfg.params.gamma_r_over_delta, defaults::gamma_r_over_delta(cfg.experiment));
    let taus = cfg.params.tau.as_ref().map(Sweep::values);
    let cells: Vec<(f64, f64, f64)> = pairs(&deltas, &ratios)
        .into_iter()
        .flat_map(|(d, r)| {
            let ts = taus.clone().unwrap_or_else(|| vec![hom::default_visibility_tau(&HOMParams::new(1.0, d, 1.0))]);
            ts.into_iter().map(move |t| (d, r, t))
        })
        .collect();
    let rows: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(d, r, t)| {
            let p = HOMParams::new(1.0, d, r * d.abs());
            let dist = hom::interval_distribution(&p, &[t], Port::Plus, None)?;
            let (same, other) = (dist.density(Port::Plus)[0], dist.density(Port::Minus)[0]);
            let v = if same + other > 0.0 { (same - other).abs() / (same + other) } else { f64::NAN };
            Ok(vec![d, r, p.gamma_r, t, v, same, other, dist.tail_fraction])
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "delta_over_kappa",
        "gamma_r_over_delta",
        "gamma_r_over_kappa",
        "tau",
        "visibility",
        "p_same",
        "p_other",
        "tail_fraction",
    ]);
    rows.iter().for_each(|r| table.push(reals(r)));
    let max_tail = rows.iter().map(|r| r[7]).fold(0.0, f64::max);
    let mut out = Outcome::new(table);
    out.grid("delta_over_kappa", &deltas);
    out.grid("gamma_r_over_delta", &ratios);
    if let Some(ts) = &taus {
        out.grid("tau", ts);
    }
    out.summary.insert("tail_error".into(), json!(max_tail));
    Ok(out)
}

fn mc_oracle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let seed = seed(cfg)?;
    let n = cfg.params.trajectories.unwrap_or(defaults::trajectories(cfg.experiment));
    let times = sweep(&cfg.params.times, defaults::times(cfg.experiment));
    let system = cfg.params.system.unwrap_or(OracleSystem::Bk);
    let (names, cells): ([&str; 3], Vec<(f64, f64)>) = match system {
        OracleSystem::Bk => {
            let deltas = sweep(&cfg.params.delta_over_kappa_eff, defaults::delta_over_kappa_eff(cfg.experiment));
            let g = cfg.params.gamma_r_over_kappa_eff.unwrap_or(defaults::GAMMA_R_OVER_KAPPA_EFF);
            (["delta_over_kappa_eff", "gamma_r_over_kappa_eff", "t"], pairs(&deltas, &[g]))
        }
        OracleSystem::Hom => {
            let deltas = sweep(&cfg.params.delta_over_kappa, defaults::delta_over_kappa(cfg.experiment));
            let gammas = sweep(&cfg.params.gamma_r_over_kappa, defaults::gamma_r_over_kappa(cfg.experiment));
            (["delta_over_kappa", "gamma_r_over_kappa", "tau"], pairs(&deltas, &gammas))
        }
    };
    let mut table = Table::new(&[names[0], names[1], names[2], "mc_cdf_plus", "exact_cdf_plus", "mc_cdf_minus", "exact_cdf_minus"]);
    let mut checks = Vec::new();
    let mut max_tail: f64 = 0.0;
    for &(d, g) in &cells {
        let cmp = match system {
            OracleSystem::Bk => {
                let p = BKParams::new(1.0, d, g);
                let sys = bk::build_effective_system(&p)?.with_ode_options(cfg.ode_options());
                let bank = DetectorBankState::from_state(&bk::round_start_state(sys.space()), g)?;
                let t_end = times.iter().copied().fold(0.0, f64::max);
                oracle::first_click_oracle(&sys, &bank, t_end, &times, n, seed)?
            }
            OracleSystem::Hom => {
                let window = cfg.params.window.unwrap_or(defaults::WINDOW);
                let (cmp, tail) = oracle::interval_oracle(&HOMParams::new(1.0, d, g), window, &times, n, seed)?;
                max_tail = max_tail.max(tail);
                cmp
            }
        };
        for (k, &t) in cmp.times.iter().enumerate() {
            table.push(reals(&[d, g, t, cmp.mc[0][k], cmp.exact[0][k], cmp.mc[1][k], cmp.exact[1][k]]));
        }
        checks.push(json!({
            names[0]: d,
            names[1]: g,
            "trajectories": cmp.trajectories,
            "normalization": cmp.normalization,
            "ks_plus": cmp.ks[0],
            "ks_minus": cmp.ks[1],
        }));
    }
    let mut out = Outcome::new(table);
    out.grid(names[2], &times);
    out.summary.insert("checks".into(), Value::Array(checks));
    out.summary.insert("tail_error".into(), json!(max_tail));
    Ok(out)
}
