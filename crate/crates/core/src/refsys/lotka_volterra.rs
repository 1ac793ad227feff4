//! Predator-prey dynamics
//!
//! ```text
//! dX1/dt =  X1 (e1 - g1 X2)
//! dX2/dt = -X2 (e2 - g2 X1)
//! ```
//!
//! integrated with fixed-step classic RK4. Orbits conserve
//! `V = g2 X1 - e2 ln X1 + g1 X2 - e1 ln X2`, which the tests use as the
//! accuracy oracle.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::trace::{Trace, TraceRecord};

const MAX_HALVINGS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LotkaVolterraParams {
    /// Prey reproduction rate `e1` (1/time).
    pub prey_growth: f64,
    /// Predator eating rate `g1`.
    pub predation: f64,
    /// Predator mortality rate `e2`.
    pub predator_mortality: f64,
    /// Prey-to-predator reproduction rate `g2`.
    pub conversion: f64,
    pub prey0: f64,
    pub predator0: f64,
    pub dt: f64,
}

impl Default for LotkaVolterraParams {
    fn default() -> Self {
        LotkaVolterraParams {
            prey_growth: 1.0,
            predation: 0.5,
            predator_mortality: 0.8,
            conversion: 0.4,
            prey0: 3.0,
            predator0: 2.0,
            dt: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LvState {
    pub t: f64,
    pub prey: f64,
    pub predator: f64,
}

impl LotkaVolterraParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("prey_growth", self.prey_growth),
            ("predation", self.predation),
            ("predator_mortality", self.predator_mortality),
            ("conversion", self.conversion),
        ];
        for (name, v) in rates {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        if !(self.prey0 > 0.0 && self.predator0 > 0.0 && self.prey0.is_finite() && self.predator0.is_finite()) {
            return Err(Error::param("population", "initial populations must be > 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "step must be > 0"));
        }
        Ok(())
    }

    /// Interior fixed point `(e2/g2, e1/g1)`, if both interaction rates are positive.
    pub fn equilibrium(&self) -> Option<(f64, f64)> {
        (self.conversion > 0.0 && self.predation > 0.0)
            .then(|| (self.predator_mortality / self.conversion, self.prey_growth / self.predation))
    }

    pub fn conserved_quantity(&self, prey: f64, predator: f64) -> f64 {
        self.conversion * prey - self.predator_mortality * math::ln(prey) + self.predation * predator
            - self.prey_growth * math::ln(predator)
    }

    fn derivative(&self, prey: f64, predator: f64) -> (f64, f64) {
        (
            prey * (self.prey_growth - self.predation * predator),
            -predator * (self.predator_mortality - self.conversion * prey),
        )
    }

    fn rk4(&self, prey: f64, predator: f64, h: f64) -> (f64, f64) {
        let (a1, b1) = self.derivative(prey, predator);
        let (a2, b2) = self.derivative(prey + 0.5 * h * a1, predator + 0.5 * h * b1);
        let (a3, b3) = self.derivative(prey + 0.5 * h * a2, predator + 0.5 * h * b2);
        let (a4, b4) = self.derivative(prey + h * a3, predator + h * b3);
        (
            prey + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4),
            predator + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4),
        )
    }

    /// Advances one grid step of length `dt`, halving the substep whenever a
    /// step would leave the positive quadrant.
    fn advance(&self, t: f64, prey: f64, predator: f64) -> Result<(f64, f64)> {
        let mut remaining = self.dt;
        let (mut a, mut b) = (prey, predator);
        let mut h = self.dt;
        let mut halvings = 0;
        while remaining > 0.0 {
            let step = h.min(remaining);
            let (na, nb) = self.rk4(a, b, step);
            if na > 0.0 && nb > 0.0 && na.is_finite() && nb.is_finite() {
                a = na;
                b = nb;
                remaining -= step;
                if remaining < self.dt * 1e-12 {
                    break;
                }
            } else {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::StiffConfiguration { t });
                }
                h *= 0.5;
            }
        }
        Ok((a, b))
    }
}

/// States at `t = k * dt` for `k = 0..=round(t_end / dt)`.
pub fn lv_simulate(params: &LotkaVolterraParams, t_end: f64) -> Result<Vec<LvState>> {
    params.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::param("t_end", "must be finite and >= 0"));
    }
    let steps = math::floor(t_end / params.dt + 0.5) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut prey, mut predator) = (params.prey0, params.predator0);
    out.push(LvState { t: 0.0, prey, predator });
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * params.dt;
        (prey, predator) = params.advance(t_prev, prey, predator)?;
        out.push(LvState {
            t: k as f64 * params.dt,
            prey,
            predator,
        });
    }
    Ok(out)
}

/// One-step-ahead trace of the population map: `x` is the state at tick
/// `t`, `y` the state `record_every` integrator steps later.
pub fn lv_trace(params: &LotkaVolterraParams, n: usize, record_every: usize) -> Result<Trace> {
    if n == 0 {
        return Err(Error::param("n", "need at least one record"));
    }
    if record_every == 0 {
        return Err(Error::param("record_every", "must be at least 1"));
    }
    params.validate()?;
    let mut records = Vec::with_capacity(n);
    let (mut prey, mut predator) = (params.prey0, params.predator0);
    let mut step = 0usize;
    for t in 0..n {
        let x = alloc::vec![prey, predator];
        for _ in 0..record_every {
            (prey, predator) = params.advance(step as f64 * params.dt, prey, predator)?;
            step += 1;
        }
        records.push(TraceRecord::new(t as i64, x, alloc::vec![prey, predator]));
    }
    Trace::from_records(records, "lotka-volterra")
}
