//! Two-photon interference between detuned single-photon sources.
//!
//! Two cavities each start with one photon and leak at rate `kappa`; their
//! output modes meet on a beam splitter in front of detectors `D+` and `D-`.
//! Numerics use the frame rotating at the frequency of source 1, so mode 2
//! carries `-delta` with `delta = omega_1 - omega_2`.

use serde::{Deserialize, Serialize};

use crate::bkprotocol::{ModelError, Result};
use crate::detector::{self, evolve_with_accumulators, observed_click_pdf, observed_click_update_unnormalized, DetectorBankState, Port};
use crate::dynamics::{self, ConditionalSystem, MINUS, PLUS};
use crate::qcore::{HilbertSpace, Operator, Space, StateVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HOMParams {
    pub kappa: f64,
    pub delta: f64,
    pub gamma_r: f64,
}

impl HOMParams {
    pub fn new(kappa: f64, delta: f64, gamma_r: f64) -> Self {
        Self { kappa, delta, gamma_r }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(ModelError::InvalidParameter(format!("kappa = {} must be > 0", self.kappa)));
        }
        if !self.delta.is_finite() {
            return Err(ModelError::InvalidParameter("delta must be finite".into()));
        }
        if !(self.gamma_r >= 0.0) || !self.gamma_r.is_finite() {
            return Err(ModelError::InvalidParameter(format!("gamma_r = {} must be >= 0", self.gamma_r)));
        }
        Ok(())
    }
}

pub fn hom_space() -> Space {
    HilbertSpace::new(&[("cav1", 2), ("cav2", 2)]).unwrap()
}

/// `|1, 1>`
pub fn initial_state() -> StateVector {
    StateVector::from_levels(hom_space(), &[1, 1]).unwrap()
}

/// `H = -delta n_2 - (i/2) kappa (n_1 + n_2)`, `R_pm = sqrt(kappa/2) (b_1 pm b_2)`.
pub fn build_hom_system(p: &HOMParams) -> Result<ConditionalSystem> {
    p.check()?;
    let s = hom_space();
    let b1 = Operator::lowering(s.clone(), "cav1")?;
    let b2 = Operator::lowering(s.clone(), "cav2")?;
    let n1 = b1.adjoint().matmul(&b1)?;
    let n2 = b2.adjoint().matmul(&b2)?;
    let h = n2
        .scale(C64::new(-p.delta, 0.0))
        .add(&n1.add(&n2)?.scale(C64::new(0.0, -0.5 * p.kappa)))?;
    // Pure loss from |1,1> never leaves the cutoff: H must conserve the
    // photon number.
    let total = n1.add(&n2)?;
    let comm = h.matmul(&total)?.sub(&total.matmul(&h)?)?;
    assert!(comm.max_abs() == 0.0, "Fock cutoff 1 requires a number-conserving H");
    let amp = C64::new((0.5 * p.kappa).sqrt(), 0.0);
    let jumps = vec![
        (PLUS.to_string(), b1.add(&b2)?.scale(amp)),
        (MINUS.to_string(), b1.sub(&b2)?.scale(amp)),
    ];
    Ok(ConditionalSystem::new(h, jumps)?)
}

/// First-click density per detector: `kappa e^{-2 kappa t1}`.
pub fn ideal_first_click_density(p: &HOMParams, t1: f64) -> f64 {
    p.kappa * (-2.0 * p.kappa * t1).exp()
}

/// Density of the second click a time `tau` after the first:
/// `kappa e^{-kappa tau} (1 pm cos(delta tau)) / 2`, plus for the same
/// detector and minus for the other one.
pub fn ideal_conditional_density(p: &HOMParams, tau: f64, same_detector: bool) -> f64 {
    let c = (p.delta * tau).cos();
    let beat = if same_detector { 1.0 + c } else { 1.0 - c };
    p.kappa * (-p.kappa * tau).exp() * 0.5 * beat
}

/// `p(t1, t2, a, b)` for ideal detectors.
pub fn ideal_joint_density(p: &HOMParams, t1: f64, t2: f64, a: Port, b: Port) -> f64 {
    if t2 < t1 {
        return 0.0;
    }
    ideal_first_click_density(p, t1) * ideal_conditional_density(p, t2 - t1, a == b)
}

/// `int_0^tau` of [`ideal_conditional_density`] (a defective CDF).
pub fn ideal_interval_cdf(p: &HOMParams, tau: f64, same_detector: bool) -> f64 {
    let (k, d) = (p.kappa, p.delta);
    let e = (-k * tau).exp();
    let osc = 0.5 * k * (k - e * (k * (d * tau).cos() - d * (d * tau).sin())) / (k * k + d * d);
    let mono = 0.5 * (1.0 - e);
    if same_detector {
        mono + osc
    } else {
        mono - osc
    }
}

/// Conditional state after the first click at `t1`, with the global phase
/// fixed so the `|1,0>` amplitude is real and positive.
pub fn state_after_first_click(p: &HOMParams, t1: f64, port: Port) -> Result<StateVector> {
    let sys = build_hom_system(p)?;
    let psi = dynamics::evolve_conditional(&sys, &initial_state(), t1)?;
    let jumped = dynamics::apply_jump(&sys, &psi, port.label())?;
    let a10 = jumped.amplitude(&[1, 0])?;
    Ok(jumped.scaled(a10.conj() / a10.norm()))
}

/// Probability that both photons leave through the same detector when the
/// detectors record no timing: `(1 + kappa^2 / (kappa^2 + delta^2)) / 2`.
pub fn bad_limit_coalescence(p: &HOMParams) -> Result<f64> {
    p.check()?;
    let k2 = p.kappa * p.kappa;
    Ok(0.5 * (1.0 + k2 / (k2 + p.delta * p.delta)))
}

/// Click-pair densities on a `t1 x tau` grid (`t2 = t1 + tau`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTable {
    pub t1: Vec<f64>,
    pub tau: Vec<f64>,
    /// Row-major `t1.len() x tau.len()` grids for the pairs
    /// `(+,+)`, `(+,-)`, `(-,+)`, `(-,-)`.
    pub densities: [Vec<f64>; 4],
}

impl CoincidenceTable {
    fn pair_index(a: Port, b: Port) -> usize {
        match (a, b) {
            (Port::Plus, Port::Plus) => 0,
            (Port::Plus, Port::Minus) => 1,
            (Port::Minus, Port::Plus) => 2,
            (Port::Minus, Port::Minus) => 3,
        }
    }

    pub fn get(&self, i: usize, j: usize, a: Port, b: Port) -> f64 {
        self.densities[Self::pair_index(a, b)][i * self.tau.len() + j]
    }

    /// Largest violation of the exchange symmetries.
    pub fn symmetry_violation(&self) -> f64 {
        let d = &self.densities;
        d[0].iter()
            .zip(&d[3])
            .chain(d[1].iter().zip(&d[2]))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// Ideal-detector coincidence table.
pub fn ideal_coincidence_table(p: &HOMParams, t1: &[f64], tau: &[f64]) -> CoincidenceTable {
    let mut densities: [Vec<f64>; 4] = Default::default();
    for a in Port::ALL {
        for b in Port::ALL {
            let k = CoincidenceTable::pair_index(a, b);
            densities[k] = t1
                .iter()
                .flat_map(|&t| tau.iter().map(move |&s| ideal_joint_density(p, t, t + s, a, b)))
                .collect();
        }
    }
    CoincidenceTable { t1: t1.to_vec(), tau: tau.to_vec(), densities }
}

fn initial_bank(p: &HOMParams) -> Result<DetectorBankState> {
    Ok(DetectorBankState::from_state(&initial_state(), p.gamma_r)?)
}

fn require_sorted(xs: &[f64], name: &str) -> Result<()> {
    if xs.iter().any(|x| !(*x >= 0.0)) || xs.windows(2).any(|w| w[1] < w[0]) {
        return Err(ModelError::InvalidParameter(format!("{name} must be nonnegative and nondecreasing")));
    }
    Ok(())
}

/// Finite-response coincidence table from the sector equations: the bank
/// is evolved to every `t1`, updated for a click at `a`, then evolved over
/// `tau` and read out at `b`.
pub fn finite_coincidence_table(p: &HOMParams, t1: &[f64], tau: &[f64]) -> Result<CoincidenceTable> {
    require_sorted(t1, "t1")?;
    require_sorted(tau, "tau")?;
    let sys = build_hom_system(p)?;
    let banks = detector::no_click_evolve_sampled(&initial_bank(p)?, &sys, t1)?;
    let nt = tau.len();
    let mut densities: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; t1.len() * nt]);
    for (i, bank) in banks.iter().enumerate() {
        for a in Port::ALL {
            let updated = observed_click_update_unnormalized(bank, a);
            let later = detector::no_click_evolve_sampled(&updated, &sys, tau)?;
            for (j, b_bank) in later.iter().enumerate() {
                for b in Port::ALL {
                    densities[CoincidenceTable::pair_index(a, b)][i * nt + j] = observed_click_pdf(b_bank, b);
                }
            }
        }
    }
    Ok(CoincidenceTable { t1: t1.to_vec(), tau: tau.to_vec(), densities })
}

/// `p_gamma(t1, t2, a, b)` for finite detector response.
pub fn finite_resolution_joint_density(p: &HOMParams, t1: f64, t2: f64, a: Port, b: Port) -> Result<f64> {
    if !(0.0 <= t1 && t1 <= t2) {
        return Err(ModelError::InvalidParameter("need 0 <= t1 <= t2".into()));
    }
    let table = finite_coincidence_table(p, &[t1], &[t2 - t1])?;
    Ok(table.get(0, 0, a, b))
}

/// Interval distribution marginalized over first clicks in `[0, window]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDistribution {
    pub first: Port,
    pub tau: Vec<f64>,
    /// `p(tau, b | a)` for `b = +` and `b = -`.
    pub density: [Vec<f64>; 2],
    /// `int_0^tau p(s, b | a) ds`.
    pub cdf: [Vec<f64>; 2],
    pub window: f64,
    /// `int_0^window p(t1, a) dt1`.
    pub first_click_weight: f64,
    /// Fraction of first clicks at `a` that fall after the window; the
    /// marginal underestimates by this relative amount.
    pub tail_fraction: f64,
}

impl IntervalDistribution {
    pub fn density(&self, b: Port) -> &[f64] {
        &self.density[usize::from(b == Port::Minus)]
    }

    pub fn cdf(&self, b: Port) -> &[f64] {
        &self.cdf[usize::from(b == Port::Minus)]
    }
}

/// Default marginalization window `3 / kappa`.
pub fn default_window(p: &HOMParams) -> f64 {
    3.0 / p.kappa
}

/// `p_gamma(tau, b | a) = int_0^T p(t1, t1 + tau, a, b) dt1 / int_0^T p(t1, a) dt1`.
///
/// The sector equations are linear and the click update is linear, so the
/// numerator equals the click density obtained by evolving the updated
/// time-integrated bank `int_0^T bank(t1) dt1` over `tau`. Two ODE solves
/// give every `tau` at once.
pub fn interval_distribution(p: &HOMParams, tau: &[f64], first: Port, window: Option<f64>) -> Result<IntervalDistribution> {
    require_sorted(tau, "tau")?;
    p.check()?;
    if !(p.gamma_r > 0.0) {
        return Err(ModelError::InvalidParameter("gamma_r must be > 0".into()));
    }
    let window = window.unwrap_or_else(|| default_window(p));
    let sys = build_hom_system(p)?;
    let horizon = window + 40.0 / p.kappa.min(p.gamma_r);
    let first_pass = evolve_with_accumulators(&initial_bank(p)?, &sys, &[window, horizon])?;
    let at_window = &first_pass[0];
    let weight = at_window.cumulative(first);
    let total = first_pass[1].cumulative(first);
    let updated = observed_click_update_unnormalized(&at_window.integral, first);
    let second_pass = evolve_with_accumulators(&updated, &sys, tau)?;
    let mut density = [Vec::with_capacity(tau.len()), Vec::with_capacity(tau.len())];
    let mut cdf = [Vec::with_capacity(tau.len()), Vec::with_capacity(tau.len())];
    for s in &second_pass {
        for (k, b) in Port::ALL.into_iter().enumerate() {
            density[k].push(observed_click_pdf(&s.bank, b) / weight);
            cdf[k].push(s.cumulative(b) / weight);
        }
    }
    Ok(IntervalDistribution {
        first,
        tau: tau.to_vec(),
        density,
        cdf,
        window,
        first_click_weight: weight,
        tail_fraction: 1.0 - weight / total,
    })
}

/// `|p(tau,+|+) - p(tau,-|+)| / (p(tau,+|+) + p(tau,-|+))`.
pub fn fringe_visibility(p: &HOMParams, tau: f64) -> Result<f64> {
    let d = interval_distribution(p, &[tau], Port::Plus, None)?;
    let (same, other) = (d.density[0][0], d.density[1][0]);
    let sum = same + other;
    if !(sum > 0.0) {
        return Err(ModelError::InvalidParameter(format!("both interval densities vanish at tau = {tau}")));
    }
    Ok((same - other).abs() / sum)
}

/// Default visibility evaluation point `20 pi / delta`, ten beat periods
/// after the first click.
pub fn default_visibility_tau(p: &HOMParams) -> f64 {
    20.0 * std::f64::consts::PI / p.delta.abs()
}

/// Same-detector fraction among runs with two ideal clicks, and its
/// binomial standard error.
pub fn sample_same_detector_fraction(p: &HOMParams, n: usize, seed: u64) -> Result<(f64, f64)> {
    let sys = build_hom_system(p)?;
    let psi = initial_state();
    let t_end = 60.0 / p.kappa;
    let mut same = 0usize;
    let mut pairs = 0usize;
    for k in 0..n as u64 {
        let opts = dynamics::TrajectoryOptions { stream: k, max_clicks: 2, ..Default::default() };
        let rec = dynamics::sample_trajectory_with(&sys, &psi, t_end, seed, &opts)?;
        if rec.clicks.len() == 2 {
            pairs += 1;
            if rec.clicks[0].label == rec.clicks[1].label {
                same += 1;
            }
        }
    }
    Ok(crate::stats::proportion(same, pairs))
}
