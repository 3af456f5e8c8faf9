//! Adaptive Dormand–Prince 5(4) integrator with continuous (dense) output
//! for complex-valued linear and nonlinear systems.

use thiserror::Error;

use crate::qcore::{C64, ZERO};

/// Right-hand side `dy/dt = f(t, y)` of a complex ODE system.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegratorError {
    #[error("exceeded {steps} steps at t = {t}")]
    MaxStepsExceeded { t: f64, steps: usize },
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("initial state has length {actual}, system expects {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
}

/// Error-control settings.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on any single step.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
            max_step: f64::INFINITY,
        }
    }
}

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Shampine's continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;

/// Summary of the last accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub t_start: f64,
    pub t_end: f64,
}

/// Single-trajectory stepper. Each call to [`Dopri5::step`] advances by one
/// accepted step and refreshes the interpolant covering that step.
pub struct Dopri5<'a, S: OdeSystem> {
    sys: &'a S,
    opts: OdeOptions,
    t: f64,
    y: Vec<C64>,
    h: f64,
    steps: usize,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    // Interpolation data for the last accepted step.
    t_old: f64,
    h_old: f64,
    rcont: [Vec<C64>; 5],
}

fn zeros(n: usize) -> Vec<C64> {
    vec![ZERO; n]
}

impl<'a, S: OdeSystem> Dopri5<'a, S> {
    pub fn new(sys: &'a S, t0: f64, y0: &[C64], opts: OdeOptions) -> Result<Self, IntegratorError> {
        let n = sys.dim();
        if y0.len() != n {
            return Err(IntegratorError::DimensionMismatch { expected: n, actual: y0.len() });
        }
        let mut me = Self {
            sys,
            opts,
            t: t0,
            y: y0.to_vec(),
            h: 0.0,
            steps: 0,
            k: std::array::from_fn(|_| zeros(n)),
            y_stage: zeros(n),
            y_new: zeros(n),
            t_old: t0,
            h_old: 0.0,
            rcont: std::array::from_fn(|_| zeros(n)),
        };
        sys.rhs(t0, &me.y, &mut me.k[0]);
        me.h = me.initial_step();
        for (r, y) in me.rcont[0].iter_mut().zip(&me.y) {
            *r = *y;
        }
        Ok(me)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Restart from a new state at the current time (after a discontinuity).
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.sys.rhs(t, &self.y, &mut self.k[0]);
        self.h = self.initial_step();
        self.t_old = t;
        self.h_old = 0.0;
        self.rcont[0].copy_from_slice(y);
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len();
        if n == 0 {
            return self.opts.max_step.min(1.0);
        }
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let sc = self.opts.atol + self.opts.rtol * self.y[i].norm();
            d0 += (self.y[i].norm() / sc).powi(2);
            d1 += (self.k[0][i].norm() / sc).powi(2);
        }
        let d0 = (d0 / n as f64).sqrt();
        let d1 = (d1 / n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.opts.max_step);
        for i in 0..n {
            self.y_stage[i] = self.y[i] + self.k[0][i] * h0;
        }
        self.sys.rhs(self.t + h0, &self.y_stage, &mut self.k[1]);
        let mut d2 = 0.0;
        for i in 0..n {
            let sc = self.opts.atol + self.opts.rtol * self.y[i].norm();
            d2 += ((self.k[1][i] - self.k[0][i]).norm() / sc).powi(2);
        }
        let d2 = (d2 / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.opts.max_step)
    }

    /// Take one accepted step, never stepping past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<StepInfo, IntegratorError> {
        let n = self.y.len();
        let mut reject = false;
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(IntegratorError::MaxStepsExceeded { t: self.t, steps: self.steps });
            }
            let remaining = t_limit - self.t;
            let mut h = self.h.min(self.opts.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= f64::EPSILON * self.t.abs().max(1.0) * 4.0 && !last {
                return Err(IntegratorError::StepSizeUnderflow { t: self.t });
            }
            self.steps += 1;
            let t = self.t;
            let y = &self.y;
            let ys = &mut self.y_stage;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;

            for i in 0..n {
                ys[i] = y[i] + k1[i] * (h * A21);
            }
            self.sys.rhs(t + C2 * h, ys, k2);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
            }
            self.sys.rhs(t + C3 * h, ys, k3);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            self.sys.rhs(t + C4 * h, ys, k4);
            for i in 0..n {
                ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            self.sys.rhs(t + C5 * h, ys, k5);
            for i in 0..n {
                ys[i] = y[i]
                    + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            self.sys.rhs(t + h, ys, k6);
            let yn = &mut self.y_new;
            for i in 0..n {
                yn[i] = y[i]
                    + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            self.sys.rhs(t + h, yn, k7);

            let mut err = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(yn[i].norm());
                err += (e.norm() / sc).powi(2);
            }
            let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };
            if !err.is_finite() {
                if yn.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) && h < 1e-300 {
                    return Err(IntegratorError::NonFinite { t });
                }
                self.h = h * FAC_MIN;
                reject = true;
                continue;
            }

            if err <= 1.0 {
                let fac = if err == 0.0 { FAC_MAX } else { SAFETY * err.powf(-0.2) };
                let fac = if reject { fac.clamp(FAC_MIN, 1.0) } else { fac.clamp(FAC_MIN, FAC_MAX) };
                // Dense output coefficients.
                for i in 0..n {
                    let dy = yn[i] - y[i];
                    let bspl = k1[i] * h - dy;
                    self.rcont[0][i] = y[i];
                    self.rcont[1][i] = dy;
                    self.rcont[2][i] = bspl;
                    self.rcont[3][i] = dy - k7[i] * h - bspl;
                    self.rcont[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5
                        + k6[i] * D6
                        + k7[i] * D7)
                        * h;
                }
                self.t_old = t;
                self.h_old = h;
                std::mem::swap(&mut self.y, &mut self.y_new);
                std::mem::swap(k1, k7);
                self.t = if last { t_limit } else { t + h };
                // Keep the proposal from the controller, not the clipped step.
                if !last || fac < 1.0 {
                    self.h = h * fac;
                }
                if !self.y.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                    return Err(IntegratorError::NonFinite { t: self.t });
                }
                return Ok(StepInfo { t_start: t, t_end: self.t });
            }
            self.h = h * (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            reject = true;
        }
    }

    /// Interpolated state at `t` inside the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [C64]) {
        if self.h_old == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = ((t - self.t_old) / self.h_old).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + (self.rcont[1][i]
                    + (self.rcont[2][i] + (self.rcont[3][i] + self.rcont[4][i] * theta1) * theta) * theta1)
                    * theta;
        }
    }

    /// Step until exactly `t_end`.
    pub fn advance_to(&mut self, t_end: f64) -> Result<(), IntegratorError> {
        while self.t < t_end {
            self.step(t_end)?;
        }
        Ok(())
    }
}

/// Integrate from `t0` to `t1` and return the final state.
pub fn integrate<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    t1: f64,
    opts: OdeOptions,
) -> Result<Vec<C64>, IntegratorError> {
    if t1 == t0 {
        return Ok(y0.to_vec());
    }
    let mut stepper = Dopri5::new(sys, t0, y0, opts)?;
    stepper.advance_to(t1)?;
    Ok(stepper.y().to_vec())
}

/// Integrate and sample the solution at the given nondecreasing times
/// (via the continuous extension, so sampling does not restrict the step).
pub fn integrate_sampled<S: OdeSystem>(
    sys: &S,
    t0: f64,
    y0: &[C64],
    times: &[f64],
    opts: OdeOptions,
) -> Result<Vec<Vec<C64>>, IntegratorError> {
    let mut out = Vec::with_capacity(times.len());
    let Some(&t_last) = times.last() else {
        return Ok(out);
    };
    let mut stepper = Dopri5::new(sys, t0, y0, opts)?;
    let mut buf = vec![ZERO; y0.len()];
    let mut idx = 0;
    while idx < times.len() && times[idx] <= t0 {
        out.push(y0.to_vec());
        idx += 1;
    }
    while idx < times.len() {
        stepper.step(t_last)?;
        while idx < times.len() && times[idx] <= stepper.t() {
            if times[idx] == stepper.t() {
                out.push(stepper.y().to_vec());
            } else {
                stepper.dense(times[idx], &mut buf);
                out.push(buf.clone());
            }
            idx += 1;
        }
    }
    Ok(out)
}
