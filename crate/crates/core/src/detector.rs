//! Detectors with a finite response rate.
//!
//! Each detector is either Ready or Triggered. A photon reaching a Ready
//! detector triggers it; a triggered detector produces its observable click
//! at rate `gamma_r` and returns to Ready. Photons reaching a triggered
//! detector are absorbed without a record. The system state is tracked in
//! four unnormalized sectors, one per joint detector configuration.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, rng_for, open_unit, Click, ConditionalSystem, DynamicsError, Result, TrajectoryOptions};
use crate::ode::{Dopri5, OdeSystem};
use crate::qcore::{hermitian_eigen, DensityMatrix, QError, Space, StateVector, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Port {
    Plus,
    Minus,
}

impl Port {
    pub const ALL: [Port; 2] = [Port::Plus, Port::Minus];

    pub fn label(self) -> &'static str {
        match self {
            Port::Plus => dynamics::PLUS,
            Port::Minus => dynamics::MINUS,
        }
    }

    pub fn from_label(label: &str) -> Option<Port> {
        match label {
            dynamics::PLUS | "+" | "plus" => Some(Port::Plus),
            dynamics::MINUS | "-" | "minus" | "D\u{2212}" => Some(Port::Minus),
            _ => None,
        }
    }

    pub fn other(self) -> Port {
        match self {
            Port::Plus => Port::Minus,
            Port::Minus => Port::Plus,
        }
    }

    /// `+1` for the symmetric port, `-1` for the antisymmetric one.
    pub fn sign(self) -> f64 {
        match self {
            Port::Plus => 1.0,
            Port::Minus => -1.0,
        }
    }
}

/// Joint detector configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    /// Both detectors ready.
    ReadyReady,
    /// Only the plus detector triggered.
    Plus,
    /// Only the minus detector triggered.
    Minus,
    /// Both triggered.
    TriggeredTriggered,
}

impl Sector {
    pub const ALL: [Sector; 4] = [Sector::ReadyReady, Sector::Plus, Sector::Minus, Sector::TriggeredTriggered];

    pub fn is_triggered(self, port: Port) -> bool {
        matches!(
            (self, port),
            (Sector::Plus, Port::Plus) | (Sector::Minus, Port::Minus) | (Sector::TriggeredTriggered, _)
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBankState {
    sectors: [DensityMatrix; 4],
    gamma_r: f64,
}

impl DetectorBankState {
    pub fn new(
        rho_rr: DensityMatrix,
        rho_plus: DensityMatrix,
        rho_minus: DensityMatrix,
        rho_tt: DensityMatrix,
        gamma_r: f64,
    ) -> Result<Self> {
        for other in [&rho_plus, &rho_minus, &rho_tt] {
            if other.space() != rho_rr.space() {
                return Err(QError::SpaceMismatch {
                    left: rho_rr.space().to_string(),
                    right: other.space().to_string(),
                }
                .into());
            }
        }
        if !(gamma_r >= 0.0) || !gamma_r.is_finite() {
            return Err(QError::NonFinite.into());
        }
        let bank = Self { sectors: [rho_rr, rho_plus, rho_minus, rho_tt], gamma_r };
        let tr = bank.total_trace();
        if tr > 1.0 + crate::DEFAULT_TOLERANCE {
            return Err(QError::TraceOutOfRange(tr).into());
        }
        Ok(bank)
    }

    /// Both detectors ready, system in `rho`.
    pub fn ready(rho: DensityMatrix, gamma_r: f64) -> Result<Self> {
        let z = DensityMatrix::zero(rho.space().clone());
        Self::new(rho, z.clone(), z.clone(), z, gamma_r)
    }

    pub fn from_state(psi: &StateVector, gamma_r: f64) -> Result<Self> {
        Self::ready(psi.projector(), gamma_r)
    }

    pub fn gamma_r(&self) -> f64 {
        self.gamma_r
    }

    pub fn space(&self) -> &Space {
        self.sectors[0].space()
    }

    pub fn sector(&self, s: Sector) -> &DensityMatrix {
        &self.sectors[s.index()]
    }

    pub fn rho_rr(&self) -> &DensityMatrix {
        &self.sectors[0]
    }

    pub fn rho_plus(&self) -> &DensityMatrix {
        &self.sectors[1]
    }

    pub fn rho_minus(&self) -> &DensityMatrix {
        &self.sectors[2]
    }

    pub fn rho_tt(&self) -> &DensityMatrix {
        &self.sectors[3]
    }

    /// Probability that no observed click has occurred yet.
    pub fn total_trace(&self) -> f64 {
        self.sectors.iter().map(|r| r.trace()).sum()
    }

    /// Sum of the four sectors: the system state with detector states
    /// traced out.
    pub fn system_state(&self) -> DensityMatrix {
        let mut acc = self.sectors[0].clone();
        for s in &self.sectors[1..] {
            acc = acc.add(s).expect("sectors share a space");
        }
        acc
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            sectors: self.sectors.clone().map(|r| r.scaled(s)),
            gamma_r: self.gamma_r,
        }
    }

    /// Smallest eigenvalue over all sectors.
    pub fn min_eigenvalue(&self) -> f64 {
        self.sectors.iter().map(|r| r.min_eigenvalue()).fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn to_vec(&self) -> Vec<C64> {
        self.sectors.iter().flat_map(|r| r.entries().iter().copied()).collect()
    }

    pub(crate) fn from_slice(space: &Space, gamma_r: f64, y: &[C64]) -> Self {
        let m = space.dim() * space.dim();
        let sector = |k: usize| DensityMatrix::from_raw(space.clone(), y[k * m..(k + 1) * m].to_vec());
        Self {
            sectors: [sector(0), sector(1), sector(2), sector(3)],
            gamma_r,
        }
    }
}

/// Channel indices of the two observed ports plus any unobserved channels.
struct Channels {
    plus: usize,
    minus: usize,
    others: Vec<usize>,
}

fn channels(sys: &ConditionalSystem) -> Result<Channels> {
    let plus = sys.jump_index(dynamics::PLUS)?;
    let minus = sys.jump_index(dynamics::MINUS)?;
    let others = (0..sys.jumps().len()).filter(|&k| k != plus && k != minus).collect();
    Ok(Channels { plus, minus, others })
}

/// Stacked sector equations. With `accumulate` set, the state also carries
/// the running integral of every sector and the cumulative observed-click
/// probability of each port.
pub(crate) struct BankOde<'a> {
    sys: &'a ConditionalSystem,
    gamma: f64,
    ch: Channels,
    accumulate: bool,
}

impl<'a> BankOde<'a> {
    pub(crate) fn new(sys: &'a ConditionalSystem, gamma: f64, accumulate: bool) -> Result<Self> {
        Ok(Self { sys, gamma, ch: channels(sys)?, accumulate })
    }

    fn m(&self) -> usize {
        self.sys.dim() * self.sys.dim()
    }
}

impl OdeSystem for BankOde<'_> {
    fn dim(&self) -> usize {
        let m = self.m();
        if self.accumulate {
            8 * m + 2
        } else {
            4 * m
        }
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        let m = self.m();
        let g = self.gamma;
        let gen = &self.sys.gen;
        let jp = &self.sys.jump_kernels[self.ch.plus];
        let jm = &self.sys.jump_kernels[self.ch.minus];
        dy.iter_mut().for_each(|z| *z = ZERO);
        let (rr, rest) = y[..4 * m].split_at(m);
        let (p, rest) = rest.split_at(m);
        let (mi, tt) = rest.split_at(m);
        {
            let (d_rr, rest) = dy[..4 * m].split_at_mut(m);
            let (d_p, rest) = rest.split_at_mut(m);
            let (d_m, d_tt) = rest.split_at_mut(m);

            gen.commutator_like_add(rr, d_rr);

            gen.commutator_like_add(p, d_p);
            jp.sandwich_add(p, 1.0, d_p);
            jp.sandwich_add(rr, 1.0, d_p);

            gen.commutator_like_add(mi, d_m);
            jm.sandwich_add(mi, 1.0, d_m);
            jm.sandwich_add(rr, 1.0, d_m);

            gen.commutator_like_add(tt, d_tt);
            jp.sandwich_add(tt, 1.0, d_tt);
            jm.sandwich_add(tt, 1.0, d_tt);
            jm.sandwich_add(p, 1.0, d_tt);
            jp.sandwich_add(mi, 1.0, d_tt);

            for i in 0..m {
                d_p[i] -= p[i] * g;
                d_m[i] -= mi[i] * g;
                d_tt[i] -= tt[i] * (2.0 * g);
            }
            // Unobserved channels leave the detector configuration alone.
            for &k in &self.ch.others {
                let r = &self.sys.jump_kernels[k];
                r.sandwich_add(rr, 1.0, d_rr);
                r.sandwich_add(p, 1.0, d_p);
                r.sandwich_add(mi, 1.0, d_m);
                r.sandwich_add(tt, 1.0, d_tt);
            }
        }
        if self.accumulate {
            dy[4 * m..8 * m].copy_from_slice(&y[..4 * m]);
            let n = self.sys.dim();
            // Complex traces keep the map linear over C; they are real on
            // Hermitian sectors.
            let tr = |s: &[C64]| (0..n).map(|i| s[i * n + i]).sum::<C64>();
            let t_tt = tr(tt);
            dy[8 * m] = (tr(p) + t_tt) * g;
            dy[8 * m + 1] = (tr(mi) + t_tt) * g;
        }
    }
}

fn check_bank(bank: &DetectorBankState, sys: &ConditionalSystem) -> Result<()> {
    if bank.space() != sys.space() {
        return Err(QError::SpaceMismatch {
            left: sys.space().to_string(),
            right: bank.space().to_string(),
        }
        .into());
    }
    Ok(())
}

/// Deterministic evolution over `dt` with no observed click.
pub fn no_click_evolve(bank: &DetectorBankState, sys: &ConditionalSystem, dt: f64) -> Result<DetectorBankState> {
    Ok(no_click_evolve_sampled(bank, sys, &[dt])?.pop().unwrap())
}

/// Snapshots of the no-click evolution at nondecreasing times.
pub fn no_click_evolve_sampled(
    bank: &DetectorBankState,
    sys: &ConditionalSystem,
    times: &[f64],
) -> Result<Vec<DetectorBankState>> {
    Ok(evolve_with_accumulators(bank, sys, times)?.into_iter().map(|s| s.bank).collect())
}

/// Bank at time `t` together with time integrals from 0 to `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSample {
    pub t: f64,
    pub bank: DetectorBankState,
    /// `int_0^t bank(s) ds`, itself a (trace-unbounded) bank.
    pub integral: DetectorBankState,
    /// Probability that the first observed click is at the plus/minus port
    /// and happens before `t`.
    pub cumulative: [f64; 2],
}

impl BankSample {
    pub fn cumulative(&self, port: Port) -> f64 {
        match port {
            Port::Plus => self.cumulative[0],
            Port::Minus => self.cumulative[1],
        }
    }
}

/// How the sector equations are propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BankSolver {
    /// Matrix exponential when the equations are stiff and small enough,
    /// adaptive integration otherwise.
    Auto,
    /// Adaptive Dormand-Prince integration.
    Ode,
    /// Exact propagators `exp(L dt)` of the (time-independent) generator.
    Exponential,
}

/// Largest stacked dimension for which `Auto` builds dense propagators.
const MAX_DENSE_DIM: usize = 700;

pub fn evolve_with_accumulators(
    bank: &DetectorBankState,
    sys: &ConditionalSystem,
    times: &[f64],
) -> Result<Vec<BankSample>> {
    evolve_with_accumulators_using(bank, sys, times, BankSolver::Auto)
}

fn generator_matrix(ode: &BankOde) -> DMatrix<C64> {
    let n = ode.dim();
    let mut l = DMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for k in 0..n {
        e[k] = C64::new(1.0, 0.0);
        ode.rhs(0.0, &e, &mut col);
        l.set_column(k, &DVector::from_column_slice(&col));
        e[k] = ZERO;
    }
    l
}

fn is_stiff(ode: &BankOde, sys: &ConditionalSystem, gamma: f64, horizon: f64) -> bool {
    let rate = gamma + sys.max_rate() + sys.h_cond().max_abs() * sys.dim() as f64;
    ode.dim() <= MAX_DENSE_DIM && rate * horizon > 5e3
}

/// `evolve_with_accumulators` with an explicit solver choice.
pub fn evolve_with_accumulators_using(
    bank: &DetectorBankState,
    sys: &ConditionalSystem,
    times: &[f64],
    solver: BankSolver,
) -> Result<Vec<BankSample>> {
    check_bank(bank, sys)?;
    if let Some(&t) = times.iter().find(|&&t| t < 0.0) {
        return Err(DynamicsError::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::UnsortedCheckpoints);
    }
    let ode = BankOde::new(sys, bank.gamma_r, true)?;
    let m = bank.space().dim().pow(2);
    let mut y0 = bank.to_vec();
    y0.resize(8 * m + 2, ZERO);
    let space = bank.space().clone();
    let g = bank.gamma_r;
    let unpack = |t: f64, y: &[C64]| BankSample {
        t,
        bank: DetectorBankState::from_slice(&space, g, &y[..4 * m]),
        integral: DetectorBankState::from_slice(&space, g, &y[4 * m..8 * m]),
        cumulative: [y[8 * m].re, y[8 * m + 1].re],
    };
    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0;
    while idx < times.len() && times[idx] == 0.0 {
        out.push(unpack(0.0, &y0));
        idx += 1;
    }
    if idx == times.len() {
        return Ok(out);
    }
    let t_last = *times.last().unwrap();
    let exponential = match solver {
        BankSolver::Ode => false,
        BankSolver::Exponential => true,
        BankSolver::Auto => is_stiff(&ode, sys, g, t_last),
    };
    if exponential {
        let l = generator_matrix(&ode);
        let mut y = DVector::from_column_slice(&y0);
        let mut t = 0.0;
        let mut cached: Option<(f64, DMatrix<C64>)> = None;
        for &target in &times[idx..] {
            let dt = target - t;
            if dt > 0.0 {
                let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-13 * dt);
                if !reuse {
                    cached = Some((dt, (&l * C64::new(dt, 0.0)).exp()));
                }
                y = &cached.as_ref().unwrap().1 * &y;
                t = target;
            }
            out.push(unpack(target, y.as_slice()));
        }
        return Ok(out);
    }
    let mut stepper = Dopri5::new(&ode, 0.0, &y0, sys.ode_options())?;
    let mut buf = vec![ZERO; y0.len()];
    while idx < times.len() {
        stepper.step(t_last)?;
        while idx < times.len() && times[idx] <= stepper.t() {
            stepper.dense(times[idx], &mut buf);
            out.push(unpack(times[idx], &buf));
            idx += 1;
        }
    }
    Ok(out)
}

/// Density of an observed click at `port`: `gamma_r tr(rho_port + rho_TT)`.
pub fn observed_click_pdf(bank: &DetectorBankState, port: Port) -> f64 {
    let own = match port {
        Port::Plus => bank.rho_plus(),
        Port::Minus => bank.rho_minus(),
    };
    bank.gamma_r * (own.trace() + bank.rho_tt().trace())
}

/// Post-click bank scaled so that its trace equals the click density.
pub fn observed_click_update_unnormalized(bank: &DetectorBankState, port: Port) -> DetectorBankState {
    let z = DensityMatrix::zero(bank.space().clone());
    let g = bank.gamma_r;
    let sectors = match port {
        Port::Plus => [bank.rho_plus().scaled(g), z.clone(), bank.rho_tt().scaled(g), z],
        Port::Minus => [bank.rho_minus().scaled(g), bank.rho_tt().scaled(g), z.clone(), z],
    };
    DetectorBankState { sectors, gamma_r: g }
}

/// Instantaneous update for an observed click, renormalized to unit trace.
/// Returns the new bank and the click weight `tr(rho_port + rho_TT)`.
pub fn observed_click_update(bank: &DetectorBankState, port: Port) -> Result<(DetectorBankState, f64)> {
    let own = match port {
        Port::Plus => bank.rho_plus(),
        Port::Minus => bank.rho_minus(),
    };
    let w = own.trace() + bank.rho_tt().trace();
    if !(w > 0.0) {
        return Err(DynamicsError::ZeroProbabilityJump(port.label().to_string()));
    }
    let z = DensityMatrix::zero(bank.space().clone());
    let s = 1.0 / w;
    let sectors = match port {
        Port::Plus => [bank.rho_plus().scaled(s), z.clone(), bank.rho_tt().scaled(s), z],
        Port::Minus => [bank.rho_minus().scaled(s), bank.rho_tt().scaled(s), z.clone(), z],
    };
    Ok((DetectorBankState { sectors, gamma_r: bank.gamma_r }, w))
}

/// Observed record from one run of the joint system and detector process.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickRecord {
    /// Observed clicks in time order.
    pub clicks: Vec<Click>,
    /// Photon arrivals at the detectors, including those absorbed by an
    /// already triggered detector.
    pub arrivals: Vec<Click>,
    /// Normalized system state at `t_end`.
    pub final_state: StateVector,
    pub seed: u64,
    pub stream: u64,
    pub t_end: f64,
}

impl ClickRecord {
    pub fn ports(&self) -> Vec<Port> {
        self.clicks.iter().map(|c| Port::from_label(&c.label).unwrap()).collect()
    }
}

fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    if rate > 0.0 {
        -open_unit(rng).ln() / rate
    } else {
        f64::INFINITY
    }
}

/// Draws a pure system state and a detector configuration distributed as
/// the normalized bank.
fn sample_initial<R: Rng>(bank: &DetectorBankState, rng: &mut R) -> Result<(Sector, StateVector)> {
    let traces: Vec<f64> = bank.sectors.iter().map(|r| r.trace().max(0.0)).collect();
    let total: f64 = traces.iter().sum();
    if !(total > 0.0) {
        return Err(QError::TraceOutOfRange(total).into());
    }
    let mut pick = rng.random::<f64>() * total;
    let mut sector = Sector::TriggeredTriggered;
    for (s, &w) in Sector::ALL.iter().zip(&traces) {
        if pick < w {
            sector = *s;
            break;
        }
        pick -= w;
    }
    let rho = bank.sector(sector);
    let n = rho.dim();
    let eig = hermitian_eigen(rho.entries(), n);
    let weights: Vec<f64> = eig.iter().map(|(l, _)| l.max(0.0)).collect();
    let wsum: f64 = weights.iter().sum();
    let mut pick = rng.random::<f64>() * wsum;
    let mut vec = &eig[n - 1].1;
    for ((_, v), &w) in eig.iter().zip(&weights) {
        if pick < w {
            vec = v;
            break;
        }
        pick -= w;
    }
    Ok((sector, StateVector::from_raw(rho.space().clone(), vec.clone()).normalized()))
}

/// Monte Carlo sample of the observed click record on `[0, t_end]`.
pub fn sample_observed_clicks(
    bank0: &DetectorBankState,
    sys: &ConditionalSystem,
    t_end: f64,
    seed: u64,
    stream: u64,
) -> Result<ClickRecord> {
    check_bank(bank0, sys)?;
    let mut rng = rng_for(seed, stream);
    let (sector, psi0) = sample_initial(bank0, &mut rng)?;
    let mut rec = observe(sys, &psi0, sector, bank0.gamma_r, t_end, &mut rng)?;
    rec.seed = seed;
    rec.stream = stream;
    Ok(rec)
}

/// Joint process from a pure system state and a known detector
/// configuration, driven by a caller-owned generator.
pub(crate) fn observe(
    sys: &ConditionalSystem,
    psi0: &StateVector,
    sector: Sector,
    gamma_r: f64,
    t_end: f64,
    rng: &mut ChaCha20Rng,
) -> Result<ClickRecord> {
    channels(sys)?;
    let hidden = dynamics::run_trajectory(sys, psi0, t_end, rng, &TrajectoryOptions::default())?;
    let mut clicks = Vec::new();
    for port in Port::ALL {
        // NaN marks a ready detector.
        let mut fire = if sector.is_triggered(port) { exponential(rng, gamma_r) } else { f64::NAN };
        for a in hidden.clicks.iter().filter(|c| c.label == port.label()) {
            if fire <= a.time {
                clicks.push(Click { time: fire, label: port.label().to_string() });
                fire = f64::NAN;
            }
            if fire.is_nan() {
                fire = a.time + exponential(rng, gamma_r);
            }
        }
        if fire <= t_end {
            clicks.push(Click { time: fire, label: port.label().to_string() });
        }
    }
    clicks.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    Ok(ClickRecord {
        clicks,
        arrivals: hidden.clicks,
        final_state: hidden.final_state,
        seed: 0,
        stream: 0,
        t_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{MINUS, PLUS};
    use crate::qcore::{HilbertSpace, Operator};

    /// Two decaying emitters feeding the two ports separately.
    fn two_emitters(rate: f64) -> ConditionalSystem {
        let space = HilbertSpace::new(&[("a", 2), ("b", 2)]).unwrap();
        let s = C64::new(rate.sqrt(), 0.0);
        let ra = Operator::lowering(space.clone(), "a").unwrap().scale(s);
        let rb = Operator::lowering(space.clone(), "b").unwrap().scale(s);
        let decay = ra.adjoint().matmul(&ra).unwrap().add(&rb.adjoint().matmul(&rb).unwrap()).unwrap();
        let h = decay.scale(C64::new(0.0, -0.5));
        ConditionalSystem::new(h, vec![(PLUS.into(), ra), (MINUS.into(), rb)]).unwrap()
    }

    #[test]
    fn ground_state_is_stationary() {
        let sys = two_emitters(1.0);
        let bank = DetectorBankState::from_state(&StateVector::basis(sys.space().clone(), 0).unwrap(), 0.0).unwrap();
        let out = no_click_evolve(&bank, &sys, 3.0).unwrap();
        assert!((out.rho_rr().get(0, 0).re - 1.0).abs() < 1e-12);
        assert_eq!(observed_click_pdf(&out, Port::Plus), 0.0);
    }

    #[test]
    fn single_emitter_cascade_matches_closed_form() {
        // One photon at rate k into a detector with response g: the click pdf
        // is k g (e^{-k t} - e^{-g t}) / (g - k).
        let (k, g) = (1.0, 3.0);
        let sys = two_emitters(k);
        let psi = StateVector::from_levels(sys.space().clone(), &[1, 0]).unwrap();
        let bank = DetectorBankState::from_state(&psi, g).unwrap();
        for &t in &[0.1, 0.7, 2.0] {
            let b = no_click_evolve(&bank, &sys, t).unwrap();
            let exact = k * g * ((-k * t).exp() - (-g * t).exp()) / (g - k);
            assert!((observed_click_pdf(&b, Port::Plus) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn update_moves_triggered_weight() {
        let sys = two_emitters(1.0);
        let psi = StateVector::from_levels(sys.space().clone(), &[1, 1]).unwrap();
        let bank = DetectorBankState::from_state(&psi, 2.0).unwrap();
        let b = no_click_evolve(&bank, &sys, 0.5).unwrap();
        let (after, w) = observed_click_update(&b, Port::Plus).unwrap();
        assert!((w - b.rho_plus().trace() - b.rho_tt().trace()).abs() < 1e-15);
        assert!((after.total_trace() - 1.0).abs() < 1e-12);
        assert_eq!(after.rho_plus().trace(), 0.0);
        assert!((after.rho_minus().trace() - b.rho_tt().trace() / w).abs() < 1e-12);
    }

    #[test]
    fn zero_response_never_clicks() {
        let sys = two_emitters(1.0);
        let psi = StateVector::from_levels(sys.space().clone(), &[1, 1]).unwrap();
        let bank = DetectorBankState::from_state(&psi, 0.0).unwrap();
        let rec = sample_observed_clicks(&bank, &sys, 20.0, 3, 0).unwrap();
        assert!(rec.clicks.is_empty());
        assert_eq!(rec.arrivals.len(), 2);
    }
}
