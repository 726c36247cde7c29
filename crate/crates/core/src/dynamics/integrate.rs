//! Dormand–Prince 5(4) integration with escape detection.

use serde::Serialize;

use super::flow::ParametrizedFlow;
use crate::error::{Error, Result};

/// Leaving the ball of this radius counts as reaching infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EscapePolicy {
    pub radius: f64,
}

impl EscapePolicy {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("escape radius {radius} must be positive")));
        }
        Ok(Self { radius })
    }

    /// Twice the circumradius of the box `[lo, hi]` about the origin.
    pub fn for_box(lo: &[f64], hi: &[f64]) -> Self {
        Self { radius: 2.0 * circumradius(lo, hi) }
    }

    /// Checks that the ball strictly contains the box.
    pub fn validate_for_box(&self, lo: &[f64], hi: &[f64]) -> Result<()> {
        let r = circumradius(lo, hi);
        if self.radius <= r {
            return Err(Error::InvalidArgument(format!(
                "escape radius {} does not exceed the domain circumradius {r}",
                self.radius
            )));
        }
        Ok(())
    }
}

/// Largest distance from the origin to a point of the box.
pub fn circumradius(lo: &[f64], hi: &[f64]) -> f64 {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| a.abs().max(b.abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorSettings {
    /// Bound on the max-norm local error estimate of every accepted step;
    /// steps shorter than one time unit are held to `tol * h`.
    pub tol: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { tol: 1e-8, min_step: 1e-12, max_step: f64::INFINITY, max_steps: 5_000_000 }
    }
}

impl IntegratorSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} must be positive", self.tol)));
        }
        if !(self.min_step > 0.0 && self.max_step > self.min_step) {
            return Err(Error::InvalidArgument("step bounds must satisfy 0 < min_step < max_step".into()));
        }
        Ok(())
    }
}

/// Samples of an integrated orbit, in integration order.
///
/// Times are strictly increasing for forward runs and strictly decreasing for
/// backward runs; the first sample is the initial condition at t = 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    dim: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    escaped: bool,
    escape_time: Option<f64>,
}

impl Trajectory {
    /// One orbit in increasing time from a backward run and a forward run
    /// out of the same initial condition.
    pub fn join(backward: &Trajectory, forward: &Trajectory) -> Result<Trajectory> {
        if backward.dim != forward.dim || backward.state(0) != forward.state(0) {
            return Err(Error::InvalidArgument("runs do not share an initial condition".into()));
        }
        let n = backward.dim;
        let mut times = Vec::with_capacity(backward.len() + forward.len() - 1);
        let mut states = Vec::with_capacity(n * times.capacity());
        for i in (0..backward.len()).rev() {
            times.push(backward.times[i]);
            states.extend_from_slice(backward.state(i));
        }
        for i in 1..forward.len() {
            times.push(forward.times[i]);
            states.extend_from_slice(forward.state(i));
        }
        Ok(Trajectory {
            dim: n,
            times,
            states,
            escaped: backward.escaped || forward.escaped,
            escape_time: forward.escape_time.or(backward.escape_time),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.times.iter().copied().zip(self.states.chunks_exact(self.dim))
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one sample")
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn escaped(&self) -> bool {
        self.escaped
    }

    pub fn escape_time(&self) -> Option<f64> {
        self.escape_time
    }
}

/// Where a single flow-map evaluation ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub time: f64,
    pub escaped: bool,
}

const SAFETY: f64 = 0.9;

// Dormand–Prince tableau (autonomous fields, so the c_i nodes are unused).
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
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Reusable scratch buffers for one integration at a time.
#[derive(Debug, Clone)]
pub struct Stepper {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    next: Vec<f64>,
}

impl Stepper {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            next: vec![0.0; dim],
        }
    }

    /// Advances `x` in place from t = 0 toward `t_end` (negative for backward
    /// time), calling `observe` after every accepted step.
    pub fn advance<F>(
        &mut self,
        flow: &ParametrizedFlow,
        lambda: f64,
        x: &mut [f64],
        t_end: f64,
        policy: &EscapePolicy,
        settings: &IntegratorSettings,
        mut observe: F,
    ) -> Result<Outcome>
    where
        F: FnMut(f64, &[f64]),
    {
        settings.validate()?;
        let n = flow.dim();
        if x.len() != n {
            return Err(Error::InvalidArgument(format!("state has length {}, flow dimension is {n}", x.len())));
        }
        if self.tmp.len() != n {
            *self = Self::new(n);
        }
        if x.iter().any(|v| !v.is_finite()) || !t_end.is_finite() {
            return Err(Error::NonFiniteState { time: 0.0 });
        }
        if norm(x) >= policy.radius {
            return Ok(Outcome { time: 0.0, escaped: true });
        }
        if t_end == 0.0 {
            return Ok(Outcome { time: 0.0, escaped: false });
        }

        let dir = t_end.signum();
        let span = t_end.abs();
        let tol = settings.tol;

        flow.eval(x, lambda, &mut self.k[0]);
        if self.k[0].iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { time: 0.0 });
        }

        // Initial step from the ratio of state to velocity magnitude.
        let d0 = norm(x);
        let d1 = norm(&self.k[0]);
        let mut h = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-4 };
        h = h.clamp(settings.min_step, settings.max_step).min(span);

        let mut t = 0.0f64;
        let mut steps = 0usize;
        while t < span {
            if steps >= settings.max_steps {
                return Err(Error::StepUnderflow { time: dir * t, min_step: settings.min_step });
            }
            let last = t + h >= span;
            if last {
                h = span - t;
            }
            let hs = dir * h;
            let ok = self.stages(flow, lambda, x, hs);
            let err = if ok { self.error_norm(hs) } else { f64::INFINITY };
            // Error per unit step for short steps keeps the drift accumulated
            // over long runs at the order of `tol`.
            let bound = tol * h.min(1.0);

            if err <= bound {
                x.copy_from_slice(&self.next);
                t = if last { span } else { t + h };
                steps += 1;
                // FSAL: the last stage is the derivative at the new point.
                self.k.swap(0, 6);
                if self.k[0].iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteState { time: dir * t });
                }
                observe(dir * t, x);
                if norm(x) >= policy.radius {
                    return Ok(Outcome { time: dir * t, escaped: true });
                }
                let factor = if err == 0.0 { 5.0 } else { (SAFETY * (bound / err).powf(0.25)).clamp(0.2, 5.0) };
                h = (h * factor).min(settings.max_step);
            } else {
                let factor = if err.is_finite() { (SAFETY * (bound / err).powf(0.25)).clamp(0.1, 0.9) } else { 0.25 };
                h *= factor;
                if h < settings.min_step {
                    return Err(Error::StepUnderflow { time: dir * t, min_step: settings.min_step });
                }
            }
        }
        Ok(Outcome { time: dir * span, escaped: false })
    }

    /// Fills stages 2..7 and the fifth-order candidate; false if any stage
    /// went non-finite.
    fn stages(&mut self, flow: &ParametrizedFlow, lambda: f64, x: &[f64], h: f64) -> bool {
        let n = x.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = x[i] + h * A21 * k1[i];
        }
        flow.eval(tmp, lambda, k2);
        for i in 0..n {
            tmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        flow.eval(tmp, lambda, k3);
        for i in 0..n {
            tmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        flow.eval(tmp, lambda, k4);
        for i in 0..n {
            tmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        flow.eval(tmp, lambda, k5);
        for i in 0..n {
            tmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        flow.eval(tmp, lambda, k6);
        for i in 0..n {
            self.next[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        if self.next.iter().any(|v| !v.is_finite()) {
            return false;
        }
        flow.eval(&self.next, lambda, k7);
        k7.iter().all(|v| v.is_finite())
    }

    fn error_norm(&self, h: f64) -> f64 {
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        let mut err = 0.0f64;
        for i in 0..k1.len() {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            err = err.max(e.abs());
        }
        if err.is_nan() {
            f64::INFINITY
        } else {
            err
        }
    }
}

#[inline]
pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Integrates `x' = f(x, lambda)` from `x0` for signed time `t_end`.
pub fn integrate(
    flow: &ParametrizedFlow,
    lambda: f64,
    x0: &[f64],
    t_end: f64,
    policy: &EscapePolicy,
    tol: f64,
) -> Result<Trajectory> {
    integrate_with(flow, lambda, x0, t_end, policy, &IntegratorSettings::with_tol(tol))
}

pub fn integrate_with(
    flow: &ParametrizedFlow,
    lambda: f64,
    x0: &[f64],
    t_end: f64,
    policy: &EscapePolicy,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let n = flow.dim();
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = x0.to_vec();
    let mut stepper = Stepper::new(n);
    let outcome = stepper.advance(flow, lambda, &mut x, t_end, policy, settings, |t, s| {
        times.push(t);
        states.extend_from_slice(s);
    })?;
    Ok(Trajectory {
        dim: n,
        times,
        states,
        escaped: outcome.escaped,
        escape_time: outcome.escaped.then_some(outcome.time),
    })
}
