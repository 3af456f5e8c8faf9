//! Two-round heralded entangling protocol between two three-level atoms.
//!
//! Each atom has ground levels `|0>`, `|1>` (the qubit) and an excited level
//! `|2>` that decays to `|1>` by emitting a photon into its cavity. The two
//! photon modes meet on a beam splitter whose outputs feed detectors `D+` and
//! `D-`. A round starts from `(|0> + |2>)(|0> + |2>)/2`; a run succeeds when
//! each of two rounds produces exactly one click. Between rounds both qubits
//! are flipped and the population of `|1>` is re-excited.
//!
//! The effective model eliminates the cavities and uses the atomic decay rate
//! `kappa_eff`. Atom 2 is detuned by `delta`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{self, Port, Sector};
use crate::dynamics::{self, rng_for, ConditionalSystem, DynamicsError, TrajectoryOptions, MINUS, PLUS};
use crate::qcore::{DensityMatrix, HilbertSpace, Operator, QError, Space, StateVector, C64, ZERO};
use crate::quad::{self, QuadError, QuadOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the full atom-cavity model needs both `g` and `kappa`")]
    MissingFullModel,
    #[error("state has weight {0:e} outside span{{|01>, |10>}}")]
    OutsideQubitSubspace(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Space(#[from] QError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BKParams {
    /// Effective atomic decay rate `4 g^2 / kappa`.
    pub kappa_eff: f64,
    /// Frequency of atom 2 minus that of atom 1.
    pub delta: f64,
    /// Detector response rate.
    pub gamma_r: f64,
    /// Combined collection and detection efficiency.
    pub eta: f64,
    /// Atom-cavity coupling of the full model.
    pub g: Option<f64>,
    /// Cavity field decay rate of the full model.
    pub kappa: Option<f64>,
}

impl BKParams {
    pub fn new(kappa_eff: f64, delta: f64, gamma_r: f64) -> Self {
        Self { kappa_eff, delta, gamma_r, eta: 1.0, g: None, kappa: None }
    }

    /// Parameters of the full model; `kappa_eff` follows from `g` and `kappa`.
    pub fn full(g: f64, kappa: f64, delta: f64, gamma_r: f64) -> Self {
        Self {
            kappa_eff: 4.0 * g * g / kappa,
            delta,
            gamma_r,
            eta: 1.0,
            g: Some(g),
            kappa: Some(kappa),
        }
    }

    /// Hard errors for invalid values.
    pub fn check(&self) -> Result<()> {
        let finite_nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter(format!("{name} = {v} must be finite and >= 0")))
            }
        };
        finite_nonneg("kappa_eff", self.kappa_eff)?;
        finite_nonneg("delta", self.delta.abs())?;
        finite_nonneg("gamma_r", self.gamma_r)?;
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(ModelError::InvalidParameter(format!("eta = {} must lie in [0, 1]", self.eta)));
        }
        if let Some(g) = self.g {
            finite_nonneg("g", g)?;
        }
        if let Some(k) = self.kappa {
            finite_nonneg("kappa", k)?;
        }
        Ok(())
    }

    /// Soft warnings; elimination of the cavity needs `kappa >> g`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let (Some(g), Some(k)) = (self.g, self.kappa) {
            if k < 10.0 * g {
                out.push(format!("kappa/g = {:.3} is not deep in the over-damped regime", k / g));
            }
        }
        out
    }

    fn require_kappa_eff(&self) -> Result<()> {
        self.check()?;
        if self.kappa_eff > 0.0 {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter("kappa_eff must be > 0".into()))
        }
    }
}

/// Click times of the two rounds (each measured from the start of its round)
/// and the parity `m` of the two detector labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickOutcome {
    pub t1: f64,
    pub t2: f64,
    /// 0 when both clicks came from the same detector, 1 otherwise.
    pub m: u8,
}

impl ClickOutcome {
    pub fn new(t1: f64, t2: f64, m: u8) -> Self {
        assert!(m <= 1, "parity must be 0 or 1");
        Self { t1, t2, m }
    }

    pub fn from_ports(t1: f64, first: Port, t2: f64, second: Port) -> Self {
        Self::new(t1, t2, u8::from(first != second))
    }

    fn sign(&self) -> f64 {
        if self.m == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Two-atom space with three levels per atom.
pub fn atom_space() -> Space {
    HilbertSpace::new(&[("atom1", 3), ("atom2", 3)]).unwrap()
}

/// Two-qubit space spanned by the ground levels.
pub fn qubit_space() -> Space {
    HilbertSpace::new(&[("atom1", 2), ("atom2", 2)]).unwrap()
}

/// Atoms followed by their cavities (at most one photon each).
pub fn full_space() -> Space {
    HilbertSpace::new(&[("atom1", 3), ("atom2", 3), ("cav1", 2), ("cav2", 2)]).unwrap()
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Effective model: `H = delta |2><2|_2 - (i/2) kappa_eff sum_j |2><2|_j`,
/// `R_pm = sqrt(kappa_eff / 2) (|1><2|_1 pm |1><2|_2)`.
pub fn build_effective_system(p: &BKParams) -> Result<ConditionalSystem> {
    p.require_kappa_eff()?;
    let s = atom_space();
    let e1 = Operator::local_transition(s.clone(), "atom1", 2, 2)?;
    let e2 = Operator::local_transition(s.clone(), "atom2", 2, 2)?;
    let h = e2
        .scale(re(p.delta))
        .add(&e1.add(&e2)?.scale(C64::new(0.0, -0.5 * p.kappa_eff)))?;
    let l1 = Operator::local_transition(s.clone(), "atom1", 1, 2)?;
    let l2 = Operator::local_transition(s, "atom2", 1, 2)?;
    let amp = re((0.5 * p.kappa_eff).sqrt());
    let jumps = vec![
        (PLUS.to_string(), l1.add(&l2)?.scale(amp)),
        (MINUS.to_string(), l1.sub(&l2)?.scale(amp)),
    ];
    Ok(ConditionalSystem::new(h, jumps)?)
}

/// Atoms coupled to lossy cavities with Jaynes-Cummings coupling `g`; the
/// detectors see `R_pm = sqrt(kappa / 2) (b_1 pm b_2)`.
pub fn build_full_system(p: &BKParams) -> Result<ConditionalSystem> {
    let (Some(g), Some(kappa)) = (p.g, p.kappa) else {
        return Err(ModelError::MissingFullModel);
    };
    p.check()?;
    if !(kappa > 0.0) {
        return Err(ModelError::InvalidParameter("kappa must be > 0".into()));
    }
    let s = full_space();
    let b1 = Operator::lowering(s.clone(), "cav1")?;
    let b2 = Operator::lowering(s.clone(), "cav2")?;
    let n1 = b1.adjoint().matmul(&b1)?;
    let n2 = b2.adjoint().matmul(&b2)?;
    let mut h = Operator::zeros(s.clone());
    for (atom, b) in [("atom1", &b1), ("atom2", &b2)] {
        let lower = Operator::local_transition(s.clone(), atom, 1, 2)?;
        let emit = b.adjoint().matmul(&lower)?;
        h = h.add(&emit.add(&emit.adjoint())?.scale(re(g)))?;
    }
    let e2 = Operator::local_transition(s, "atom2", 2, 2)?;
    h = h.add(&e2.add(&n2)?.scale(re(p.delta)))?;
    h = h.add(&n1.add(&n2)?.scale(C64::new(0.0, -0.5 * kappa)))?;
    let amp = re((0.5 * kappa).sqrt());
    let jumps = vec![
        (PLUS.to_string(), b1.add(&b2)?.scale(amp)),
        (MINUS.to_string(), b1.sub(&b2)?.scale(amp)),
    ];
    Ok(ConditionalSystem::new(h, jumps)?)
}

/// `(|0> + |2>)(|0> + |2>)/2` on the atom space, with empty cavities if the
/// space has them.
pub fn round_start_state(space: &Space) -> StateVector {
    let mut amps = vec![ZERO; space.dim()];
    let extra = space.dims().len() - 2;
    for a in [0, 2] {
        for b in [0, 2] {
            let mut levels = vec![a, b];
            levels.extend(std::iter::repeat(0).take(extra));
            amps[space.index_of(&levels).unwrap()] = re(0.5);
        }
    }
    StateVector::new(space.clone(), amps).unwrap()
}

/// Qubit flip on both atoms followed by `|1> -> |2>` re-excitation, as one
/// level permutation per atom: `0 -> 2`, `1 -> 0`, `2 -> 1`.
pub fn between_rounds(psi: &StateVector) -> StateVector {
    let space = psi.space().clone();
    let map = [2usize, 0, 1];
    let mut amps = vec![ZERO; space.dim()];
    for (i, &a) in psi.amplitudes().iter().enumerate() {
        let mut levels = space.levels_of(i);
        levels[0] = map[levels[0]];
        levels[1] = map[levels[1]];
        amps[space.index_of(&levels).unwrap()] = a;
    }
    StateVector::new_with_tolerance(space, amps, f64::INFINITY).unwrap()
}

/// Restriction to the ground levels of each atom (cavities must be empty).
/// Returns the qubit state and the squared norm left outside.
pub fn project_to_qubits(psi: &StateVector) -> (StateVector, f64) {
    let space = psi.space();
    let q = qubit_space();
    let mut amps = vec![ZERO; 4];
    let mut outside = 0.0;
    for (i, &a) in psi.amplitudes().iter().enumerate() {
        let levels = space.levels_of(i);
        if levels[0] < 2 && levels[1] < 2 && levels[2..].iter().all(|&l| l == 0) {
            amps[2 * levels[0] + levels[1]] = a;
        } else {
            outside += a.norm_sqr();
        }
    }
    (StateVector::new_with_tolerance(q, amps, f64::INFINITY).unwrap(), outside)
}

fn qubit_state(c01: C64, c10: C64) -> StateVector {
    let mut amps = vec![ZERO; 4];
    amps[1] = c01;
    amps[2] = c10;
    StateVector::new_with_tolerance(qubit_space(), amps, 1e-9).unwrap()
}

/// `(|01> + (-1)^m e^{-i delta (t1 - t2)} |10>) / sqrt 2`.
///
/// The bit flip between rounds exchanges which atom carries the detuned
/// phase, so the round-one phase enters conjugated.
pub fn ideal_final_state(o: &ClickOutcome, delta: f64) -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phase = C64::from_polar(o.sign() * s, -delta * (o.t1 - o.t2));
    qubit_state(re(s), phase)
}

/// Target Bell state `(|01> + (-1)^m |10>) / sqrt 2`.
pub fn target_state(m: u8) -> StateVector {
    ideal_final_state(&ClickOutcome::new(0.0, 0.0, m), 0.0)
}

/// `exp(-i theta sigma_z / 2)` on qubit 1 with `theta = delta (t1 - t2)`.
pub fn phase_correction(psi: &StateVector, o: &ClickOutcome, delta: f64) -> Result<StateVector> {
    if psi.space().as_ref() != qubit_space().as_ref() {
        return Err(QError::SpaceMismatch {
            left: qubit_space().to_string(),
            right: psi.space().to_string(),
        }
        .into());
    }
    let a = psi.amplitudes();
    let outside = a[0].norm_sqr() + a[3].norm_sqr();
    if outside > 1e-12 * psi.norm_squared().max(1.0) {
        return Err(ModelError::OutsideQubitSubspace(outside));
    }
    let theta = delta * (o.t1 - o.t2);
    let q0 = C64::from_polar(1.0, -0.5 * theta);
    let q1 = C64::from_polar(1.0, 0.5 * theta);
    Ok(qubit_state(a[1] * q0, a[2] * q1))
}

/// End of round one with detectors that carry no timing information,
/// conditioned on a `D+` click.
pub fn bad_limit_first_round_state(p: &BKParams) -> Result<DensityMatrix> {
    p.require_kappa_eff()?;
    let c = re(p.kappa_eff) / C64::new(p.kappa_eff, p.delta);
    Ok(two_level_rho(0.5, 0.5, 0.5 * c))
}

/// State after both rounds with timing-blind detectors (same-detector
/// outcome).
pub fn bad_limit_final_state(p: &BKParams) -> Result<DensityMatrix> {
    p.require_kappa_eff()?;
    let k2 = p.kappa_eff * p.kappa_eff;
    Ok(two_level_rho(0.5, 0.5, re(0.5 * k2 / (k2 + p.delta * p.delta))))
}

/// `(1 + kappa_eff^2 / (kappa_eff^2 + delta^2)) / 2`
pub fn bad_limit_fidelity(p: &BKParams) -> Result<f64> {
    p.require_kappa_eff()?;
    let k2 = p.kappa_eff * p.kappa_eff;
    Ok(0.5 * (1.0 + k2 / (k2 + p.delta * p.delta)))
}

/// Qubit density matrix with populations on |01>, |10> and coherence
/// `rho_{01,10} = c`.
fn two_level_rho(p01: f64, p10: f64, c: C64) -> DensityMatrix {
    let mut e = vec![ZERO; 16];
    e[4 + 1] = re(p01);
    e[2 * 4 + 2] = re(p10);
    e[4 + 2] = c;
    e[2 * 4 + 1] = c.conj();
    DensityMatrix::from_raw(qubit_space(), e)
}

/// `e^{a + ib} - 1` without cancellation for small arguments.
fn expm1c(z: C64) -> C64 {
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    C64::new(a.exp_m1() * b.cos() - 2.0 * s * s, a.exp() * b.sin())
}

/// `int_0^t e^{-gamma (t - s)} e^{-(kappa + i delta) s} ds`
///
/// The two-step detector cascade acting on one exponentially decaying
/// photon amplitude. At `kappa + i delta = gamma` the closed form has a
/// removable singularity and the series branch is used.
pub fn cascade_factor(t: f64, kappa: f64, delta: f64, gamma: f64) -> C64 {
    if t <= 0.0 {
        return ZERO;
    }
    let x = C64::new(kappa - gamma, delta);
    let z = x * t;
    if z.norm() < 1e-3 || (x.norm() < 1e-6 * kappa && z.norm() < 0.1) {
        let series = re(1.0) - z / 2.0 + z * z / 6.0 - z * z * z / 24.0 + z * z * z * z / 120.0;
        return series * ((-gamma * t).exp() * t);
    }
    if x.re >= 0.0 {
        -expm1c(-z) / x * (-gamma * t).exp()
    } else {
        expm1c(z) / x * C64::from_polar((-kappa * t).exp(), -delta * t)
    }
}

/// Conditional qubit state (unnormalized) after clicks at `t1`, `t2` with
/// detector response rate `gamma_r`; `gamma_r^2 tr(rho)` is the density of
/// the click pair.
///
/// Nonzero entries: `rho_{01,01} = rho_{10,10} = (k^2/16) A(t1) A(t2)` and
/// `rho_{10,01} = (-1)^m (k^2/16) B(t1) conj(B(t2))`, where `B` is
/// [`cascade_factor`] with the detuning and `A` the same without it.
pub fn intermediate_rho(o: &ClickOutcome, p: &BKParams) -> Result<DensityMatrix> {
    p.require_kappa_eff()?;
    let (k, d, g) = (p.kappa_eff, p.delta, p.gamma_r);
    let scale = k * k / 16.0;
    let a = cascade_factor(o.t1, k, 0.0, g).re * cascade_factor(o.t2, k, 0.0, g).re * scale;
    let c10_01 = cascade_factor(o.t1, k, d, g) * cascade_factor(o.t2, k, d, g).conj() * (o.sign() * scale);
    Ok(two_level_rho(a, a, c10_01.conj()))
}

/// `|B(t)| / A(t)`, the single-round coherence ratio, with its `t -> 0`
/// limit of 1.
fn coherence_ratio(t: f64, p: &BKParams) -> f64 {
    let a = cascade_factor(t, p.kappa_eff, 0.0, p.gamma_r).re;
    if a <= 0.0 {
        return 1.0;
    }
    (cascade_factor(t, p.kappa_eff, p.delta, p.gamma_r).norm() / a).min(1.0)
}

/// Fidelity of the normalized conditional state after the optimal phase
/// correction: `1/2 + |rho_{01,10}| / tr(rho)`.
pub fn conditional_fidelity(o: &ClickOutcome, p: &BKParams) -> Result<f64> {
    p.require_kappa_eff()?;
    Ok(0.5 + 0.5 * coherence_ratio(o.t1, p) * coherence_ratio(o.t2, p))
}

/// `<psi_phi| rho |psi_phi> / tr(rho)` with `psi_phi = (|01> + e^{i phi} |10>) / sqrt 2`.
pub fn fidelity_at_phase(rho: &DensityMatrix, phi: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = qubit_state(re(s), C64::from_polar(s, phi));
    rho.expectation_in(&psi).unwrap() / rho.trace()
}

/// Phase maximizing [`fidelity_at_phase`].
pub fn optimal_phase(rho: &DensityMatrix) -> f64 {
    -rho.get(1, 2).arg()
}

/// Average fidelity with its error budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageFidelity {
    pub value: f64,
    /// Quadrature error estimate on `[0, t_max]^2`.
    pub quad_error: f64,
    /// Upper bound on the integrand mass outside `[0, t_max]^2`.
    pub tail_bound: f64,
    pub t_max: f64,
}

/// Integration window `30 / min(k g / (g + k), g)` for the click times.
pub fn integration_window(p: &BKParams) -> f64 {
    let (k, g) = (p.kappa_eff, p.gamma_r);
    30.0 / (k * g / (g + k)).min(g)
}

fn require_rates(p: &BKParams) -> Result<()> {
    p.require_kappa_eff()?;
    if p.gamma_r > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter("gamma_r must be > 0".into()))
    }
}

/// Breakpoints separating the fast (`1/kappa_eff`, `1/delta`) and slow
/// (`1/gamma_r`) parts of the click-time integrands.
fn breakpoints(p: &BKParams, t_max: f64) -> Vec<f64> {
    let fast = 40.0 / p.kappa_eff.max(p.gamma_r);
    let mid = 40.0 / p.kappa_eff;
    let mut bp = vec![0.0];
    for b in [fast, mid] {
        if b < t_max && b > *bp.last().unwrap() {
            bp.push(b);
        }
    }
    bp.push(t_max);
    bp
}

/// `int_t^inf A(s) ds`
fn population_tail(t: f64, p: &BKParams) -> Result<f64> {
    let (k, g) = (p.kappa_eff, p.gamma_r);
    let span = 60.0 / k.min(g);
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, ..QuadOptions::default() };
    Ok(quad::integrate(|s| cascade_factor(s, k, 0.0, g).re, t, t + span, opts)?.value)
}

/// `1/2 + int int 8 gamma_r^2 |rho_{01,10}(t1, t2)| dt1 dt2`, evaluated with
/// a nested adaptive rule on `[0, t_max]^2`.
pub fn average_fidelity(p: &BKParams) -> Result<AverageFidelity> {
    average_fidelity_with(p, QuadOptions { abs_tol: 1e-11, rel_tol: 1e-9, max_intervals: 4000 })
}

pub fn average_fidelity_with(p: &BKParams, opts: QuadOptions) -> Result<AverageFidelity> {
    require_rates(p)?;
    let t_max = integration_window(p);
    let bp = breakpoints(p, t_max);
    let (k, d, g) = (p.kappa_eff, p.delta, p.gamma_r);
    let pref = 8.0 * g * g * k * k / 16.0;
    // The integrand factorizes, so each outer node needs only one inner pass;
    // the inner integrals are still computed adaptively per node.
    let mut total = 0.0;
    let mut err = 0.0;
    for w in bp.windows(2) {
        for v in bp.windows(2) {
            let r = quad::integrate_2d(
                |t1, t2| pref * cascade_factor(t1, k, d, g).norm() * cascade_factor(t2, k, d, g).norm(),
                (w[0], w[1]),
                (v[0], v[1]),
                opts,
            )?;
            total += r.value;
            err += r.error;
        }
    }
    let tail_a = population_tail(t_max, p)?;
    let inside = 1.0 / (k * g) - tail_a;
    let tail_bound = 0.5 * (g * k).powi(2) * (2.0 * inside * tail_a + tail_a * tail_a);
    Ok(AverageFidelity { value: 0.5 + total, quad_error: err, tail_bound, t_max })
}

/// Same quantity via the product of two one-dimensional integrals.
pub fn average_fidelity_factorized(p: &BKParams) -> Result<f64> {
    require_rates(p)?;
    let t_max = integration_window(p);
    let (k, d, g) = (p.kappa_eff, p.delta, p.gamma_r);
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };
    let one = quad::integrate_pieces(|t| cascade_factor(t, k, d, g).norm(), &breakpoints(p, t_max), opts)?.value;
    Ok(0.5 + 0.5 * (g * k * one).powi(2))
}

/// Smallest detector rate whose average fidelity reaches `target`, found by
/// bisection in `ln gamma_r` on `[1e-6, 1e8] kappa_eff`. Returns 0 when the
/// bad-detector limit already reaches the target.
pub fn detector_rate_for_fidelity(kappa_eff: f64, delta: f64, target: f64) -> Result<f64> {
    let f = |g: f64| average_fidelity_factorized(&BKParams::new(kappa_eff, delta, g));
    if bad_limit_fidelity(&BKParams::new(kappa_eff, delta, 1.0))? >= target {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = ((1e-6 * kappa_eff).ln(), (1e8 * kappa_eff).ln());
    if !(f(lo.exp())? < target && f(hi.exp())? >= target) {
        return Err(ModelError::InvalidParameter(format!("average fidelity {target} is not bracketed")));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid.exp())? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// `int int gamma_r^2 tr(rho(t1, t2)) dt1 dt2` for one ordered detector pair,
/// by 2-D quadrature of [`intermediate_rho`].
pub fn two_click_probability(p: &BKParams) -> Result<(f64, f64)> {
    require_rates(p)?;
    let t_max = integration_window(p);
    let bp = breakpoints(p, t_max);
    let g2 = p.gamma_r * p.gamma_r;
    let opts = QuadOptions { abs_tol: 1e-10, rel_tol: 1e-9, max_intervals: 4000 };
    let mut total = 0.0;
    let mut err = 0.0;
    for w in bp.windows(2) {
        for v in bp.windows(2) {
            let r = quad::integrate_2d(
                |t1, t2| g2 * intermediate_rho(&ClickOutcome::new(t1, t2, 0), p).unwrap().trace(),
                (w[0], w[1]),
                (v[0], v[1]),
                opts,
            )?;
            total += r.value;
            err += r.error;
        }
    }
    Ok((total, err))
}

/// `eta^2 / 2`
pub fn success_probability(p: &BKParams) -> f64 {
    0.5 * p.eta * p.eta
}

/// Detectors used in a simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Detectors {
    /// Clicks at the photon arrival times.
    Ideal,
    /// Exponential response with the given rate.
    Finite(f64),
}

/// Result of one simulated two-round run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    /// Observed clicks per round: (time from round start, port).
    pub rounds: [Vec<(f64, Port)>; 2],
    /// Heralded outcome when each round gave exactly one click.
    pub outcome: Option<ClickOutcome>,
    /// Final qubit state of a heralded run (normalized).
    pub final_state: Option<StateVector>,
    /// Squared norm outside the qubit subspace before projection.
    pub leakage: f64,
}

/// Monte Carlo run of both rounds on the given model, keeping every
/// component of the state. Each round lasts `round_time`; clicks that a
/// finite-rate detector would emit later are not recorded.
pub fn simulate_protocol(
    sys: &ConditionalSystem,
    detectors: Detectors,
    round_time: f64,
    seed: u64,
    stream: u64,
) -> Result<ProtocolRun> {
    let mut rng = rng_for(seed, stream);
    let mut psi = round_start_state(sys.space());
    let mut rounds: [Vec<(f64, Port)>; 2] = [Vec::new(), Vec::new()];
    for (r, record) in rounds.iter_mut().enumerate() {
        if r == 1 {
            psi = between_rounds(&psi);
        }
        let (clicks, final_state) = match detectors {
            Detectors::Ideal => {
                let rec = dynamics::run_trajectory(sys, &psi, round_time, &mut rng, &TrajectoryOptions::default())?;
                (rec.clicks, rec.final_state)
            }
            Detectors::Finite(g) => {
                let rec = detector::observe(sys, &psi, Sector::ReadyReady, g, round_time, &mut rng)?;
                (rec.clicks, rec.final_state)
            }
        };
        *record = clicks.iter().map(|c| (c.time, Port::from_label(&c.label).unwrap())).collect();
        if record.len() != 1 {
            return Ok(ProtocolRun { rounds, outcome: None, final_state: None, leakage: 0.0 });
        }
        psi = final_state;
    }
    let (a, b) = (rounds[0][0], rounds[1][0]);
    let outcome = ClickOutcome::from_ports(a.0, a.1, b.0, b.1);
    let (q, leakage) = project_to_qubits(&psi);
    Ok(ProtocolRun {
        rounds,
        outcome: Some(outcome),
        final_state: Some(q.normalized()),
        leakage,
    })
}

/// `delta (t1 - t2)` wrapped to `(-pi, pi]`.
pub fn wrapped_phase(o: &ClickOutcome, delta: f64) -> f64 {
    let x = (delta * (o.t1 - o.t2)).rem_euclid(2.0 * PI);
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}
