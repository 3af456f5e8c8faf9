//! No-click propagation, Lindblad propagation and the Monte Carlo
//! wave-function sampler.
//!
//! Propagation works on precompiled sparse copies of `-i H_cond` and of the
//! jump operators; storage of the user-facing objects stays dense.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::ode::{integrate, Dopri5, IntegratorError, OdeOptions, OdeSystem};
use crate::qcore::{DensityMatrix, Operator, QError, Space, StateVector, C64, DEFAULT_TOLERANCE, ZERO};

/// Label of the jump channel for the symmetric beam-splitter output.
pub const PLUS: &str = "D+";
/// Label of the jump channel for the antisymmetric beam-splitter output.
pub const MINUS: &str = "D-";

/// Relative slack allowed on the squared norm between accepted steps.
const NORM_SLACK: f64 = 1e-8;
/// Time resolution of the waiting-time root search.
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Space(#[from] QError),
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error("anti-Hermitian part of H_cond differs from -(i/2) sum R^dag R by {0:e}")]
    InconsistentDecay(f64),
    #[error("unknown jump label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate jump label `{0}`")]
    DuplicateLabel(String),
    #[error("jump `{0}` has zero probability for this state")]
    ZeroProbabilityJump(String),
    #[error("squared norm increased from {before} to {after} at t = {t}")]
    NormIncreased { t: f64, before: f64, after: f64 },
    #[error("negative time interval {0}")]
    NegativeTime(f64),
    #[error("initial state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("checkpoint times must be nondecreasing")]
    UnsortedCheckpoints,
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Triplet-list sparse matrix used inside right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Sparse {
    pub(crate) n: usize,
    pub(crate) entries: Vec<(usize, usize, C64)>,
}

impl Sparse {
    pub(crate) fn from_dense(m: &[C64], n: usize) -> Self {
        let entries = (0..n * n)
            .filter(|&k| m[k] != ZERO)
            .map(|k| (k / n, k % n, m[k]))
            .collect();
        Self { n, entries }
    }

    /// `out += A x`
    #[inline]
    pub(crate) fn mul_vec_add(&self, x: &[C64], out: &mut [C64]) {
        for &(i, k, a) in &self.entries {
            out[i] += a * x[k];
        }
    }

    /// `out += A rho + rho A^dag`
    #[inline]
    pub(crate) fn commutator_like_add(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        for &(i, k, a) in &self.entries {
            let src = &rho[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &r) in dst.iter_mut().zip(src) {
                *d += a * r;
            }
        }
        for &(j, k, a) in &self.entries {
            let ac = a.conj();
            for i in 0..n {
                out[i * n + j] += rho[i * n + k] * ac;
            }
        }
    }

    /// `out += s A rho A^dag`
    #[inline]
    pub(crate) fn sandwich_add(&self, rho: &[C64], s: f64, out: &mut [C64]) {
        let n = self.n;
        for &(i, k, a) in &self.entries {
            let a = a * s;
            for &(j, l, b) in &self.entries {
                out[i * n + j] += a * rho[k * n + l] * b.conj();
            }
        }
    }

    /// `<x| A^dag A |x>`
    pub(crate) fn norm_sqr_of_image(&self, x: &[C64], scratch: &mut [C64]) -> f64 {
        scratch.iter_mut().for_each(|z| *z = ZERO);
        self.mul_vec_add(x, scratch);
        scratch.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Non-Hermitian no-click generator together with its labelled jump
/// operators.
#[derive(Debug, Clone)]
pub struct ConditionalSystem {
    space: Space,
    h_cond: Operator,
    jumps: Vec<(String, Operator)>,
    ode: OdeOptions,
    pub(crate) gen: Sparse,
    pub(crate) jump_kernels: Vec<Sparse>,
}

impl ConditionalSystem {
    /// Checks that the decay encoded in `h_cond` matches the jump channels:
    /// `(H - H^dag)/2 = -(i/2) sum_j R_j^dag R_j`.
    pub fn new(h_cond: Operator, jumps: Vec<(String, Operator)>) -> Result<Self> {
        let space = h_cond.space().clone();
        let n = space.dim();
        let mut decay = Operator::zeros(space.clone());
        for (k, (label, r)) in jumps.iter().enumerate() {
            if jumps[..k].iter().any(|(l, _)| l == label) {
                return Err(DynamicsError::DuplicateLabel(label.clone()));
            }
            decay = decay.add(&r.adjoint().matmul(r)?)?;
        }
        let expected = decay.scale(C64::new(0.0, -0.5));
        let deviation = h_cond.anti_hermitian_part().sub(&expected)?.max_abs();
        let scale = h_cond.max_abs().max(decay.max_abs()).max(1.0);
        if deviation > DEFAULT_TOLERANCE * scale {
            return Err(DynamicsError::InconsistentDecay(deviation));
        }
        let minus_i_h: Vec<C64> = h_cond.entries().iter().map(|z| z * C64::new(0.0, -1.0)).collect();
        let gen = Sparse::from_dense(&minus_i_h, n);
        let jump_kernels = jumps.iter().map(|(_, r)| Sparse::from_dense(r.entries(), n)).collect();
        Ok(Self {
            space,
            h_cond,
            jumps,
            ode: OdeOptions::default(),
            gen,
            jump_kernels,
        })
    }

    pub fn with_ode_options(mut self, ode: OdeOptions) -> Self {
        self.ode = ode;
        self
    }

    pub fn ode_options(&self) -> OdeOptions {
        self.ode
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn h_cond(&self) -> &Operator {
        &self.h_cond
    }

    pub fn jumps(&self) -> &[(String, Operator)] {
        &self.jumps
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.jumps.iter().map(|(l, _)| l.as_str())
    }

    pub fn jump_index(&self, label: &str) -> Result<usize> {
        self.jumps
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| DynamicsError::UnknownLabel(label.to_string()))
    }

    pub fn jump(&self, label: &str) -> Result<&Operator> {
        Ok(&self.jumps[self.jump_index(label)?].1)
    }

    /// Largest decay eigenvalue, i.e. the fastest total click rate.
    pub fn max_rate(&self) -> f64 {
        let decay = self.h_cond.anti_hermitian_part().scale(C64::new(0.0, 2.0));
        decay.hermitian_eigenvalues().last().copied().unwrap_or(0.0).max(0.0)
    }
}

/// `d psi/dt = -i H_cond psi`
pub(crate) struct NoClick<'a>(pub(crate) &'a ConditionalSystem);

impl OdeSystem for NoClick<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|z| *z = ZERO);
        self.0.gen.mul_vec_add(y, dy);
    }
}

/// Unconditional master equation on a row-major density matrix.
struct Lindblad<'a>(&'a ConditionalSystem);

impl OdeSystem for Lindblad<'_> {
    fn dim(&self) -> usize {
        self.0.dim() * self.0.dim()
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) {
        dy.iter_mut().for_each(|z| *z = ZERO);
        self.0.gen.commutator_like_add(y, dy);
        for r in &self.0.jump_kernels {
            r.sandwich_add(y, 1.0, dy);
        }
    }
}

fn norm_sqr(y: &[C64]) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum()
}

fn check_space(sys: &ConditionalSystem, space: &Space) -> Result<()> {
    if sys.space() == space {
        Ok(())
    } else {
        Err(QError::SpaceMismatch {
            left: sys.space().to_string(),
            right: space.to_string(),
        }
        .into())
    }
}

/// `exp(-i H_cond dt) psi`, with the squared norm checked to be
/// non-increasing across every accepted step.
pub fn evolve_conditional(sys: &ConditionalSystem, psi: &StateVector, dt: f64) -> Result<StateVector> {
    Ok(evolve_conditional_sampled(sys, psi, &[dt])?.pop().unwrap())
}

/// Conditional states at each of the nondecreasing times in `times`.
pub fn evolve_conditional_sampled(
    sys: &ConditionalSystem,
    psi: &StateVector,
    times: &[f64],
) -> Result<Vec<StateVector>> {
    check_space(sys, psi.space())?;
    if let Some(&t) = times.iter().find(|&&t| t < 0.0) {
        return Err(DynamicsError::NegativeTime(t));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::UnsortedCheckpoints);
    }
    let space = psi.space().clone();
    let ode = NoClick(sys);
    let mut out = Vec::with_capacity(times.len());
    let mut idx = 0;
    while idx < times.len() && times[idx] == 0.0 {
        out.push(psi.clone());
        idx += 1;
    }
    let Some(&t_last) = times.last() else {
        return Ok(out);
    };
    if idx == times.len() {
        return Ok(out);
    }
    let mut stepper = Dopri5::new(&ode, 0.0, psi.amplitudes(), sys.ode_options())?;
    let mut buf = vec![ZERO; psi.dim()];
    let mut before = psi.norm_squared();
    while idx < times.len() {
        stepper.step(t_last)?;
        let after = norm_sqr(stepper.y());
        if after > before * (1.0 + NORM_SLACK) + f64::MIN_POSITIVE {
            return Err(DynamicsError::NormIncreased { t: stepper.t(), before, after });
        }
        before = after;
        while idx < times.len() && times[idx] <= stepper.t() {
            stepper.dense(times[idx], &mut buf);
            out.push(StateVector::from_raw(space.clone(), buf.clone()));
            idx += 1;
        }
    }
    Ok(out)
}

/// Probability of at least one click before each of `times`,
/// `1 - |psi~(t)|^2`, for a normalized start state.
pub fn first_click_cdf(sys: &ConditionalSystem, psi: &StateVector, times: &[f64]) -> Result<Vec<f64>> {
    Ok(evolve_conditional_sampled(sys, psi, times)?.iter().map(|s| 1.0 - s.norm_squared()).collect())
}

/// `<psi| R^dag R |psi>` for the named channel.
pub fn click_density(sys: &ConditionalSystem, psi: &StateVector, label: &str) -> Result<f64> {
    check_space(sys, psi.space())?;
    let k = sys.jump_index(label)?;
    let mut scratch = vec![ZERO; psi.dim()];
    Ok(sys.jump_kernels[k].norm_sqr_of_image(psi.amplitudes(), &mut scratch))
}

/// Sum of all click densities.
pub fn total_click_density(sys: &ConditionalSystem, psi: &StateVector) -> Result<f64> {
    check_space(sys, psi.space())?;
    let mut scratch = vec![ZERO; psi.dim()];
    Ok(sys
        .jump_kernels
        .iter()
        .map(|r| r.norm_sqr_of_image(psi.amplitudes(), &mut scratch))
        .sum())
}

/// `R |psi> / ||R |psi>||`
pub fn apply_jump(sys: &ConditionalSystem, psi: &StateVector, label: &str) -> Result<StateVector> {
    check_space(sys, psi.space())?;
    let k = sys.jump_index(label)?;
    let mut out = vec![ZERO; psi.dim()];
    sys.jump_kernels[k].mul_vec_add(psi.amplitudes(), &mut out);
    let n2 = norm_sqr(&out);
    if !(n2 > 0.0) {
        return Err(DynamicsError::ZeroProbabilityJump(label.to_string()));
    }
    let s = 1.0 / n2.sqrt();
    out.iter_mut().for_each(|z| *z *= s);
    Ok(StateVector::from_raw(psi.space().clone(), out))
}

/// Integrates the unconditional master equation over `dt`.
pub fn lindblad_propagate(sys: &ConditionalSystem, rho: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
    check_space(sys, rho.space())?;
    if dt < 0.0 {
        return Err(DynamicsError::NegativeTime(dt));
    }
    let y = integrate(&Lindblad(sys), 0.0, rho.entries(), dt, sys.ode_options())?;
    Ok(DensityMatrix::from_raw(rho.space().clone(), y))
}

/// One recorded detection.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Click {
    pub time: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub clicks: Vec<Click>,
    /// Normalized state at `t_end`.
    pub final_state: StateVector,
    pub seed: u64,
    pub stream: u64,
    pub t_end: f64,
    /// Normalized conditional states at the requested checkpoint times that
    /// were reached before sampling stopped.
    pub snapshots: Vec<StateVector>,
}

impl TrajectoryRecord {
    pub fn click_times(&self) -> Vec<f64> {
        self.clicks.iter().map(|c| c.time).collect()
    }
}

/// Optional controls for [`sample_trajectory_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    /// Independent RNG stream within the seed, usually the trajectory index.
    pub stream: u64,
    /// Stop at the time of this many clicks.
    pub max_clicks: usize,
    /// Nondecreasing times at which to store the conditional state.
    pub checkpoints: Vec<f64>,
    /// Optional cap on the integrator step.
    pub max_step: Option<f64>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            stream: 0,
            max_clicks: usize::MAX,
            checkpoints: Vec::new(),
            max_step: None,
        }
    }
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Waiting-time MCWF trajectory on `[0, t_end]` with default options.
pub fn sample_trajectory(sys: &ConditionalSystem, psi0: &StateVector, t_end: f64, seed: u64) -> Result<TrajectoryRecord> {
    sample_trajectory_with(sys, psi0, t_end, seed, &TrajectoryOptions::default())
}

pub fn sample_trajectory_with(
    sys: &ConditionalSystem,
    psi0: &StateVector,
    t_end: f64,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    let mut rng = rng_for(seed, opts.stream);
    let mut rec = run_trajectory(sys, psi0, t_end, &mut rng, opts)?;
    rec.seed = seed;
    rec.stream = opts.stream;
    Ok(rec)
}

fn snapshot(stepper: &Dopri5<'_, NoClick<'_>>, space: &Space, t: f64, buf: &mut [C64]) -> StateVector {
    stepper.dense(t, buf);
    StateVector::from_raw(space.clone(), buf.to_vec()).normalized()
}

/// Trajectory driven by a caller-owned generator. The seed and stream in the
/// returned record are left for the caller to fill in.
pub(crate) fn run_trajectory(
    sys: &ConditionalSystem,
    psi0: &StateVector,
    t_end: f64,
    rng: &mut ChaCha20Rng,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    check_space(sys, psi0.space())?;
    if t_end < 0.0 {
        return Err(DynamicsError::NegativeTime(t_end));
    }
    let n0 = psi0.norm_squared();
    if (n0 - 1.0).abs() > 1e-8 {
        return Err(DynamicsError::NotNormalized(n0));
    }
    if opts.checkpoints.windows(2).any(|w| w[1] < w[0]) {
        return Err(DynamicsError::UnsortedCheckpoints);
    }
    let space = psi0.space().clone();
    let n = psi0.dim();
    let ode = NoClick(sys);
    let mut ode_opts = sys.ode_options();
    if let Some(h) = opts.max_step {
        ode_opts.max_step = h;
    }
    let mut stepper = Dopri5::new(&ode, 0.0, psi0.amplitudes(), ode_opts)?;
    let mut buf = vec![ZERO; n];
    let mut scratch = vec![ZERO; n];
    let mut rates = vec![0.0; sys.jump_kernels.len()];
    let mut clicks: Vec<Click> = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_cp = 0;
    let cps = &opts.checkpoints;
    while next_cp < cps.len() && cps[next_cp] <= 0.0 {
        snapshots.push(psi0.clone());
        next_cp += 1;
    }

    let mut u = open_unit(rng);
    let mut before = 1.0;
    let mut stopped: Option<(f64, Vec<C64>)> = None;
    while stepper.t() < t_end && opts.max_clicks > 0 {
        let info = stepper.step(t_end)?;
        let after = norm_sqr(stepper.y());
        if after > before * (1.0 + NORM_SLACK) + f64::MIN_POSITIVE {
            return Err(DynamicsError::NormIncreased { t: info.t_end, before, after });
        }
        before = after;
        if after > u {
            while next_cp < cps.len() && cps[next_cp] <= info.t_end {
                snapshots.push(snapshot(&stepper, &space, cps[next_cp], &mut buf));
                next_cp += 1;
            }
            continue;
        }
        // The jump lies inside this step: bisect on the interpolated norm.
        let (mut lo, mut hi) = (info.t_start, info.t_end);
        while hi - lo > ROOT_TOL * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            stepper.dense(mid, &mut buf);
            if norm_sqr(&buf) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tj = hi;
        while next_cp < cps.len() && cps[next_cp] <= tj {
            snapshots.push(snapshot(&stepper, &space, cps[next_cp], &mut buf));
            next_cp += 1;
        }
        stepper.dense(tj, &mut buf);
        let mut total = 0.0;
        for (r, k) in rates.iter_mut().zip(&sys.jump_kernels) {
            *r = k.norm_sqr_of_image(&buf, &mut scratch);
            total += *r;
        }
        if !(total > 0.0) {
            // Round-off pushed the norm under u without an open channel.
            u = open_unit(rng) * after;
            continue;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = rates.len() - 1;
        for (k, &r) in rates.iter().enumerate() {
            if pick < r {
                chosen = k;
                break;
            }
            pick -= r;
        }
        scratch.iter_mut().for_each(|z| *z = ZERO);
        sys.jump_kernels[chosen].mul_vec_add(&buf, &mut scratch);
        let s = 1.0 / norm_sqr(&scratch).sqrt();
        scratch.iter_mut().for_each(|z| *z *= s);
        clicks.push(Click { time: tj, label: sys.jumps[chosen].0.clone() });
        if clicks.len() >= opts.max_clicks {
            stopped = Some((tj, scratch.clone()));
            break;
        }
        stepper.reset(tj, &scratch);
        before = 1.0;
        u = open_unit(rng);
    }

    let (t_stop, final_amps) = match stopped {
        Some(s) => s,
        None => {
            while next_cp < cps.len() && cps[next_cp] <= t_end {
                snapshots.push(StateVector::from_raw(space.clone(), stepper.y().to_vec()).normalized());
                next_cp += 1;
            }
            (t_end, stepper.y().to_vec())
        }
    };
    Ok(TrajectoryRecord {
        clicks,
        final_state: StateVector::from_raw(space, final_amps).normalized(),
        seed: 0,
        stream: 0,
        t_end: t_stop,
        snapshots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::HilbertSpace;

    fn decaying_qubit(rate: f64) -> ConditionalSystem {
        let space = HilbertSpace::new(&[("q", 2)]).unwrap();
        let sm = Operator::lowering(space.clone(), "q").unwrap();
        let h = Operator::local(space, "q", &[ZERO, ZERO, ZERO, C64::new(0.0, -0.5 * rate)]).unwrap();
        ConditionalSystem::new(h, vec![(PLUS.into(), sm.scale(C64::new(rate.sqrt(), 0.0)))]).unwrap()
    }

    #[test]
    fn inconsistent_decay_is_rejected() {
        let space = HilbertSpace::new(&[("q", 2)]).unwrap();
        let sm = Operator::lowering(space.clone(), "q").unwrap();
        let h = Operator::zeros(space);
        assert!(matches!(
            ConditionalSystem::new(h, vec![(PLUS.into(), sm)]),
            Err(DynamicsError::InconsistentDecay(_))
        ));
    }

    #[test]
    fn conditional_decay_matches_exponential() {
        let sys = decaying_qubit(2.0);
        let psi = StateVector::basis(sys.space().clone(), 1).unwrap();
        let out = evolve_conditional(&sys, &psi, 1.5).unwrap();
        assert!((out.amplitudes()[1].re - (-1.5f64).exp()).abs() < 1e-9);
        let same = evolve_conditional(&sys, &psi, 0.0).unwrap();
        assert_eq!(same, psi);
    }

    #[test]
    fn jump_to_ground() {
        let sys = decaying_qubit(1.0);
        let psi = StateVector::basis(sys.space().clone(), 1).unwrap();
        assert!((click_density(&sys, &psi, PLUS).unwrap() - 1.0).abs() < 1e-14);
        let g = apply_jump(&sys, &psi, PLUS).unwrap();
        assert_eq!(g.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(matches!(apply_jump(&sys, &g, PLUS), Err(DynamicsError::ZeroProbabilityJump(_))));
        assert!(matches!(click_density(&sys, &g, "X"), Err(DynamicsError::UnknownLabel(_))));
    }

    #[test]
    fn trajectory_is_deterministic_and_decays_once() {
        let sys = decaying_qubit(1.0);
        let psi = StateVector::basis(sys.space().clone(), 1).unwrap();
        let a = sample_trajectory(&sys, &psi, 50.0, 7).unwrap();
        let b = sample_trajectory(&sys, &psi, 50.0, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.clicks.len(), 1);
        assert_eq!(a.final_state.amplitudes()[0].norm(), 1.0);
    }

    #[test]
    fn lindblad_relaxes_to_ground() {
        let sys = decaying_qubit(1.0);
        let rho = StateVector::basis(sys.space().clone(), 1).unwrap().projector();
        let out = lindblad_propagate(&sys, &rho, 20.0).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-8);
        assert!(out.get(0, 0).re > 1.0 - 1e-8);
    }
}
