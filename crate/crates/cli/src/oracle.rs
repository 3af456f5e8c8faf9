//! Monte Carlo checks of the deterministic densities.
//!
//! Trajectory `k` of a run always uses stream `k` of the seed, so results do
//! not depend on the thread count.

use photonbeat::detector::{evolve_with_accumulators, sample_observed_clicks, DetectorBankState, Port};
use photonbeat::dynamics::{sample_trajectory_with, ConditionalSystem, TrajectoryOptions};
use photonbeat::hom::{build_hom_system, initial_state, interval_distribution, HOMParams};
use photonbeat::stats;
use photonbeat::{ModelError, StateVector};
use rayon::prelude::*;

/// Points of the internal grid on which deterministic CDFs are tabulated
/// for interpolation.
const FINE_GRID: usize = 4001;

/// Linear interpolation in a tabulated nondecreasing grid, clamped at the ends.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let i = xs.partition_point(|&g| g < x);
    if i >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = if x1 > x0 { (x - x0) / (x1 - x0) } else { 1.0 };
    ys[i - 1] + w * (ys[i] - ys[i - 1])
}

fn port_index(p: Port) -> usize {
    usize::from(p == Port::Minus)
}

/// Empirical and deterministic CDFs of one observable per port, with the
/// KS distance of each pair.
#[derive(Debug, Clone)]
pub struct PortComparison {
    pub times: Vec<f64>,
    pub mc: [Vec<f64>; 2],
    pub exact: [Vec<f64>; 2],
    pub ks: [f64; 2],
    /// Sample count that normalizes the empirical CDFs.
    pub normalization: usize,
    pub trajectories: usize,
}

impl PortComparison {
    pub fn max_ks(&self) -> f64 {
        self.ks[0].max(self.ks[1])
    }
}

fn ecdf(samples: &[f64], total: usize, t: f64) -> f64 {
    samples.partition_point(|&s| s <= t) as f64 / total as f64
}

fn compare(
    times: &[f64],
    mut samples: [Vec<f64>; 2],
    normalization: usize,
    trajectories: usize,
    grid: &[f64],
    tables: [Vec<f64>; 2],
) -> PortComparison {
    for s in &mut samples {
        s.sort_by(f64::total_cmp);
    }
    let ks = [0, 1].map(|k| stats::ks_distance(&samples[k], normalization, |t| interpolate(grid, &tables[k], t)));
    let mc = [0, 1].map(|k| times.iter().map(|&t| ecdf(&samples[k], normalization, t)).collect());
    let exact = [0, 1].map(|k| times.iter().map(|&t| interpolate(grid, &tables[k], t)).collect());
    PortComparison { times: times.to_vec(), mc, exact, ks, normalization, trajectories }
}

/// First observed click time at each port, sampled with the detector
/// process, against the cumulative probabilities of the sector equations.
pub fn first_click_oracle(
    sys: &ConditionalSystem,
    bank0: &DetectorBankState,
    t_end: f64,
    times: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<PortComparison, ModelError> {
    let firsts: Vec<Option<(f64, Port)>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let rec = sample_observed_clicks(bank0, sys, t_end, seed, k)?;
            Ok(rec.clicks.first().map(|c| (c.time, Port::from_label(&c.label).unwrap())))
        })
        .collect::<Result<_, ModelError>>()?;
    let mut samples = [Vec::new(), Vec::new()];
    for (t, port) in firsts.into_iter().flatten() {
        samples[port_index(port)].push(t);
    }
    let grid = stats::grid(0.0, t_end, FINE_GRID, false);
    let acc = evolve_with_accumulators(bank0, sys, &grid)?;
    let tables = Port::ALL.map(|p| acc.iter().map(|s| s.cumulative(p)).collect());
    Ok(compare(times, samples, trajectories, trajectories, &grid, tables))
}

/// Interval to the next observed click after a first click at the plus
/// port inside `[0, window]`, against the marginalized interval
/// distribution. Runs whose first click is elsewhere are discarded.
pub fn interval_oracle(
    p: &HOMParams,
    window: f64,
    taus: &[f64],
    trajectories: usize,
    seed: u64,
) -> Result<(PortComparison, f64), ModelError> {
    let sys = build_hom_system(p)?;
    let bank0 = DetectorBankState::from_state(&initial_state(), p.gamma_r)?;
    let horizon = 40.0 / p.kappa.min(p.gamma_r);
    let t_end = window + horizon;
    let pairs: Vec<Option<Option<(f64, Port)>>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let rec = sample_observed_clicks(&bank0, &sys, t_end, seed, k)?;
            let ports = rec.ports();
            Ok(match rec.clicks.first() {
                Some(c) if ports[0] == Port::Plus && c.time <= window => {
                    Some(rec.clicks.get(1).map(|d| (d.time - c.time, ports[1])))
                }
                _ => None,
            })
        })
        .collect::<Result<_, ModelError>>()?;
    let conditioned = pairs.iter().filter(|x| x.is_some()).count();
    let mut samples = [Vec::new(), Vec::new()];
    for (tau, port) in pairs.into_iter().flatten().flatten() {
        samples[port_index(port)].push(tau);
    }
    let grid = stats::grid(0.0, horizon, FINE_GRID, false);
    let dist = interval_distribution(p, &grid, Port::Plus, Some(window))?;
    let tables = [dist.cdf(Port::Plus).to_vec(), dist.cdf(Port::Minus).to_vec()];
    Ok((compare(taus, samples, conditioned.max(1), trajectories, &grid, tables), dist.tail_fraction))
}

/// First click times of ideal-detector trajectories (no click: absent).
pub fn first_click_times(
    sys: &ConditionalSystem,
    psi0: &StateVector,
    t_end: f64,
    trajectories: usize,
    seed: u64,
) -> Result<Vec<f64>, ModelError> {
    let times: Vec<Option<f64>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|k| {
            let opts = TrajectoryOptions { stream: k, max_clicks: 1, ..Default::default() };
            let rec = sample_trajectory_with(sys, psi0, t_end, seed, &opts)?;
            Ok(rec.clicks.first().map(|c| c.time))
        })
        .collect::<Result<_, ModelError>>()?;
    let mut out: Vec<f64> = times.into_iter().flatten().collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}
