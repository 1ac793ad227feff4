//! Toy systems with closed-form behaviour and the knobs that perturb them.
//!
//! Every model produces a scalar output. The dynamic model is the
//! linear-Gaussian state model
//!
//! ```text
//! h[t+1] = a h[t] + b . x[t]
//! y[t]   ~ Normal(c h[t] + d . x[t], sigma^2)
//! ```
//!
//! Hidden knobs (latent drift, confounder) shape the data but are never
//! written to the emitted trace.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::sysclass::{ProbeSystem, ResetRefused};
use crate::trace::{Trace, TraceRecord, CIRCUMSTANCE_CHANGE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyModel {
    /// `y = w . x + noise`; noise scale `sigma * (1 + noise_gain * ctx)`.
    Static {
        weights: Vec<f64>,
        sigma: f64,
        #[serde(default)]
        noise_gain: f64,
    },
    /// `y = (w0 + w_ctx * ctx) . x + noise`, memoryless.
    NonStationary {
        base_weights: Vec<f64>,
        context_weights: Vec<f64>,
        sigma: f64,
    },
    /// Linear-Gaussian state model (`|a| < 1` for the stable variant).
    Dynamic {
        contraction: f64,
        input_gain: Vec<f64>,
        state_gain: f64,
        feedthrough: Vec<f64>,
        sigma: f64,
    },
    /// Cause-to-effect reversed: a class `y in {0,1}` drawn with
    /// `P(y=1) = prior`, then `x ~ Normal(mean_y, sigma^2)` per dimension.
    Anticausal {
        prior: f64,
        class_means: [f64; 2],
        dims: usize,
        sigma: f64,
    },
}

impl ToyModel {
    pub fn static_default() -> Self {
        ToyModel::Static {
            weights: vec![1.0],
            sigma: 0.5,
            noise_gain: 0.0,
        }
    }

    pub fn non_stationary_default() -> Self {
        ToyModel::NonStationary {
            base_weights: vec![1.0],
            context_weights: vec![0.5],
            sigma: 0.5,
        }
    }

    pub fn dynamic_default() -> Self {
        ToyModel::Dynamic {
            contraction: 0.9,
            input_gain: vec![1.0],
            state_gain: 1.0,
            feedthrough: vec![0.0],
            sigma: 0.5,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ToyModel::Static { weights, .. } => weights.len(),
            ToyModel::NonStationary { base_weights, .. } => base_weights.len(),
            ToyModel::Dynamic { input_gain, .. } => input_gain.len(),
            ToyModel::Anticausal { dims, .. } => *dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigma = match self {
            ToyModel::Static { weights, sigma, noise_gain } => {
                if weights.is_empty() {
                    return Err(Error::param("weights", "need at least one input"));
                }
                if !noise_gain.is_finite() {
                    return Err(Error::param("noise_gain", "must be finite"));
                }
                *sigma
            }
            ToyModel::NonStationary {
                base_weights,
                context_weights,
                sigma,
            } => {
                if base_weights.is_empty() || base_weights.len() != context_weights.len() {
                    return Err(Error::param("weights", "base and context weights need equal, non-zero length"));
                }
                *sigma
            }
            ToyModel::Dynamic {
                contraction,
                input_gain,
                feedthrough,
                sigma,
                ..
            } => {
                if input_gain.is_empty() || input_gain.len() != feedthrough.len() {
                    return Err(Error::param("input_gain", "input and feedthrough gains need equal, non-zero length"));
                }
                if !contraction.is_finite() {
                    return Err(Error::param("contraction", "must be finite"));
                }
                *sigma
            }
            ToyModel::Anticausal { prior, dims, sigma, .. } => {
                if !(0.0..=1.0).contains(prior) {
                    return Err(Error::param("prior", "must lie in [0, 1]"));
                }
                if *dims == 0 {
                    return Err(Error::param("dims", "need at least one input"));
                }
                *sigma
            }
        };
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", "must be > 0"));
        }
        Ok(())
    }
}

/// Distribution of the exogenous inputs (ignored by [`ToyModel::Anticausal`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputProcess {
    Gaussian { mean: f64, std: f64 },
    Uniform { low: f64, high: f64 },
    /// `amplitude * sin(2 pi t / period) + Normal(0, std^2)`, a slowly
    /// varying excitation.
    Sinusoid { amplitude: f64, period: f64, std: f64 },
}

impl Default for InputProcess {
    fn default() -> Self {
        InputProcess::Gaussian { mean: 0.0, std: 1.0 }
    }
}

impl InputProcess {
    fn sample(&self, t: i64, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            InputProcess::Gaussian { mean, std } => mean + std * normal(rng),
            InputProcess::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            InputProcess::Sinusoid { amplitude, period, std } => {
                amplitude * math::sin(2.0 * core::f64::consts::PI * t as f64 / period) + std * normal(rng)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            InputProcess::Gaussian { mean, std } => mean.is_finite() && std >= 0.0 && std.is_finite(),
            InputProcess::Uniform { low, high } => low.is_finite() && high.is_finite() && low < high,
            InputProcess::Sinusoid { amplitude, period, std } => {
                amplitude.is_finite() && period > 0.0 && period.is_finite() && std >= 0.0 && std.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("input", "invalid input process parameters"))
        }
    }
}

/// A timed override of the data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub t: i64,
    /// Replaces the output gain from `t` on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    /// Added to every input feature from `t` on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_offset: Option<f64>,
    /// One-off additive kick to the dynamic state at `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_kick: Option<f64>,
    /// Replaces the class prior of the anticausal model from `t` on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
}

impl Intervention {
    pub fn at(t: i64) -> Self {
        Intervention {
            t,
            gain: None,
            input_offset: None,
            state_kick: None,
            prior: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextProcess {
    Constant { value: f64 },
    /// Fresh uniform draw per record.
    Uniform { low: f64, high: f64 },
    Sinusoid { amplitude: f64, period: f64, offset: f64 },
    /// Cycles through `levels`, holding each for `dwell` records.
    Steps { levels: Vec<f64>, dwell: usize },
}

impl ContextProcess {
    fn value(&self, t: i64, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            ContextProcess::Constant { value } => *value,
            ContextProcess::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ContextProcess::Sinusoid { amplitude, period, offset } => {
                offset + amplitude * math::sin(2.0 * core::f64::consts::PI * t as f64 / period)
            }
            ContextProcess::Steps { levels, dwell } => {
                let k = (t.max(0) as usize / (*dwell).max(1)) % levels.len().max(1);
                levels.get(k).copied().unwrap_or(0.0)
            }
        }
    }
}

/// Observable context signal, written to each record's `circ` under `name`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSignal {
    pub name: String,
    pub process: ContextProcess,
    /// Multiplies the output gain by `gain` whenever `ctx > threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gated_gain: Option<GatedGain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GatedGain {
    pub threshold: f64,
    pub gain: f64,
}

/// Influencing factors of the data-generating process.
///
/// `interventions` and `context` are observable and annotated on the trace;
/// `latent_drift` (a hidden random walk added to the output gain) and
/// `confounder` (a hidden variable added to both `x` and `y`) are not.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PsdKnobs {
    pub interventions: Vec<Intervention>,
    pub context: Option<ContextSignal>,
    /// Per-step standard deviation of the hidden gain walk.
    pub latent_drift: Option<f64>,
    /// Coupling strength of the hidden confounder.
    pub confounder: Option<f64>,
    /// Environment tag, used as the trace source label.
    pub environment: Option<String>,
}

impl PsdKnobs {
    pub fn validate(&self) -> Result<()> {
        if self.interventions.windows(2).any(|w| w[0].t > w[1].t) {
            return Err(Error::param("interventions", "schedule must be sorted by time"));
        }
        if let Some(ctx) = &self.context {
            match &ctx.process {
                ContextProcess::Steps { levels, dwell } if levels.is_empty() || *dwell == 0 => {
                    return Err(Error::param("context", "steps need levels and a dwell >= 1"));
                }
                ContextProcess::Sinusoid { period, .. } if !(*period > 0.0) => {
                    return Err(Error::param("context", "period must be > 0"));
                }
                ContextProcess::Uniform { low, high } if !(low < high) => {
                    return Err(Error::param("context", "uniform context needs low < high"));
                }
                _ => {}
            }
        }
        for (name, v) in [("latent_drift", self.latent_drift), ("confounder", self.confounder)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::param(name, "must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// Everything needed to generate a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub model: ToyModel,
    #[serde(default)]
    pub input: InputProcess,
    #[serde(default)]
    pub knobs: PsdKnobs,
}

impl ToyConfig {
    pub fn new(model: ToyModel) -> Self {
        ToyConfig {
            model,
            input: InputProcess::default(),
            knobs: PsdKnobs::default(),
        }
    }

    pub fn with_input(mut self, input: InputProcess) -> Self {
        self.input = input;
        self
    }

    pub fn with_knobs(mut self, knobs: PsdKnobs) -> Self {
        self.knobs = knobs;
        self
    }

    /// Reference configuration whose passive classification is `Static`.
    pub fn static_reference() -> Self {
        ToyConfig::new(ToyModel::static_default())
    }

    /// Reference configuration whose passive classification is
    /// `NonStationary`: the weight follows a slow context cycle.
    pub fn non_stationary_reference() -> Self {
        ToyConfig::new(ToyModel::non_stationary_default()).with_knobs(PsdKnobs {
            context: Some(ContextSignal {
                name: "ctx".into(),
                process: ContextProcess::Sinusoid {
                    amplitude: 1.0,
                    period: 10_000.0,
                    offset: 0.0,
                },
                gated_gain: None,
            }),
            ..PsdKnobs::default()
        })
    }

    /// Reference configuration whose passive classification is `Dynamic`:
    /// the contracting state model driven by a slow input excitation.
    pub fn dynamic_reference() -> Self {
        ToyConfig::new(ToyModel::dynamic_default()).with_input(InputProcess::Sinusoid {
            amplitude: 1.0,
            period: 10_000.0,
            std: 1.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.input.validate()?;
        self.knobs.validate()
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mutable generator state shared by [`generate_trace`] and [`ToySystem`].
#[derive(Debug, Clone)]
struct Engine {
    config: ToyConfig,
    rng: ChaCha8Rng,
    state: f64,
    gain: f64,
    input_offset: f64,
    prior_override: Option<f64>,
    drift: f64,
    next_intervention: usize,
}

impl Engine {
    fn new(config: ToyConfig, seed: u64) -> Self {
        Engine {
            config,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: 0.0,
            gain: 1.0,
            input_offset: 0.0,
            prior_override: None,
            drift: 0.0,
            next_intervention: 0,
        }
    }

    /// Applies interventions scheduled at or before `t`; true if one fired at `t`.
    fn apply_interventions(&mut self, t: i64) -> bool {
        let mut fired = false;
        while let Some(iv) = self.config.knobs.interventions.get(self.next_intervention) {
            if iv.t > t {
                break;
            }
            if let Some(g) = iv.gain {
                self.gain = g;
            }
            if let Some(o) = iv.input_offset {
                self.input_offset = o;
            }
            if let Some(k) = iv.state_kick {
                self.state += k;
            }
            if let Some(p) = iv.prior {
                self.prior_override = Some(p);
            }
            fired |= iv.t == t;
            self.next_intervention += 1;
        }
        fired
    }

    fn context(&mut self, t: i64) -> Option<f64> {
        let ctx = self.config.knobs.context.as_ref()?;
        Some(ctx.process.value(t, &mut self.rng))
    }

    fn effective_gain(&self, ctx: Option<f64>) -> f64 {
        let gated = match (&self.config.knobs.context, ctx) {
            (Some(ContextSignal { gated_gain: Some(g), .. }), Some(c)) if c > g.threshold => g.gain,
            _ => 1.0,
        };
        self.gain * gated + self.drift
    }

    /// Draws `(x, y)` for tick `t`. `x_given` replaces the exogenous input draw.
    fn emit(&mut self, t: i64, ctx: Option<f64>, x_given: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let dim = self.config.model.input_dim();
        let confounder = self.config.knobs.confounder.map(|s| s * normal(&mut self.rng));
        let c = ctx.unwrap_or(0.0);

        if let ToyModel::Anticausal {
            prior,
            class_means,
            sigma,
            ..
        } = self.config.model
        {
            let p = self.prior_override.unwrap_or(prior);
            let class = usize::from(self.rng.random::<f64>() < p);
            let mut x: Vec<f64> = (0..dim)
                .map(|_| class_means[class] + sigma * normal(&mut self.rng) + self.input_offset)
                .collect();
            if let Some(u) = confounder {
                x.iter_mut().for_each(|v| *v += u);
            }
            return (x, vec![class as f64]);
        }

        let mut x: Vec<f64> = match x_given {
            Some(x) => x.to_vec(),
            None => {
                let input = self.config.input.clone();
                (0..dim).map(|_| input.sample(t, &mut self.rng) + self.input_offset).collect()
            }
        };
        if let Some(u) = confounder {
            x.iter_mut().for_each(|v| *v += u);
        }
        let gain = self.effective_gain(ctx);
        let noise = normal(&mut self.rng);
        let y = match &self.config.model {
            ToyModel::Static {
                weights,
                sigma,
                noise_gain,
            } => gain * dot(weights, &x) + sigma * (1.0 + noise_gain * c).max(0.0) * noise,
            ToyModel::NonStationary {
                base_weights,
                context_weights,
                sigma,
            } => {
                let w: Vec<f64> = base_weights.iter().zip(context_weights).map(|(b, k)| b + k * c).collect();
                gain * dot(&w, &x) + sigma * noise
            }
            ToyModel::Dynamic {
                contraction,
                input_gain,
                state_gain,
                feedthrough,
                sigma,
            } => {
                let y = gain * (state_gain * self.state + dot(feedthrough, &x)) + sigma * noise;
                self.state = contraction * self.state + dot(input_gain, &x);
                y
            }
            ToyModel::Anticausal { .. } => unreachable!(),
        };
        let y = y + confounder.unwrap_or(0.0);
        if let Some(scale) = self.config.knobs.latent_drift {
            self.drift += scale * normal(&mut self.rng);
        }
        (x, vec![y])
    }
}

/// Draws `n` records with ticks `0..n`. Context values are annotated under
/// the context name; every intervention tick carries a
/// `circumstance_change` event. A pure function of its arguments.
pub fn generate_trace(config: &ToyConfig, n: usize, seed: u64) -> Result<Trace> {
    config.validate()?;
    if n == 0 {
        return Err(Error::param("n", "need at least one record"));
    }
    let mut engine = Engine::new(config.clone(), seed);
    let ctx_name = config.knobs.context.as_ref().map(|c| c.name.clone());
    let mut records = Vec::with_capacity(n);
    for t in 0..n as i64 {
        let fired = engine.apply_interventions(t);
        let ctx = engine.context(t);
        let (x, y) = engine.emit(t, ctx, None);
        let mut rec = TraceRecord::new(t, x, y);
        if let (Some(name), Some(c)) = (&ctx_name, ctx) {
            rec.circ.insert(name.clone(), c);
        }
        if fired {
            rec = rec.with_event(CIRCUMSTANCE_CHANGE);
        }
        records.push(rec);
    }
    let source = config.knobs.environment.clone().unwrap_or_else(|| String::from("refsys"));
    Trace::from_records(records, source)
}

/// Resettable, steppable handle on a toy model for active probing.
///
/// The context value is whatever was last set with
/// [`ProbeSystem::set_context`], falling back to the configured context
/// process evaluated at the internal tick.
#[derive(Debug, Clone)]
pub struct ToySystem {
    engine: Engine,
    tick: i64,
    context_override: Option<f64>,
    refuse_reset: bool,
}

impl ToySystem {
    pub fn new(config: ToyConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if matches!(config.model, ToyModel::Anticausal { .. }) {
            return Err(Error::param("model", "the anticausal model has no steppable input"));
        }
        Ok(ToySystem {
            engine: Engine::new(config, seed),
            tick: 0,
            context_override: None,
            refuse_reset: false,
        })
    }

    /// Makes `reset` fail, emulating a system that cannot be reset.
    pub fn refusing_reset(mut self) -> Self {
        self.refuse_reset = true;
        self
    }

    pub fn state(&self) -> f64 {
        self.engine.state
    }

    pub fn config(&self) -> &ToyConfig {
        &self.engine.config
    }

    /// Expected output for input `x` from the current state, before noise.
    pub fn mean_output(&self, x: &[f64]) -> f64 {
        let ctx = self.context_override.unwrap_or(0.0);
        let gain = self.engine.gain;
        match &self.engine.config.model {
            ToyModel::Static { weights, .. } => gain * dot(weights, x),
            ToyModel::NonStationary {
                base_weights,
                context_weights,
                ..
            } => {
                let w: Vec<f64> = base_weights.iter().zip(context_weights).map(|(b, k)| b + k * ctx).collect();
                gain * dot(&w, x)
            }
            ToyModel::Dynamic {
                state_gain, feedthrough, ..
            } => gain * (state_gain * self.engine.state + dot(feedthrough, x)),
            ToyModel::Anticausal { .. } => 0.0,
        }
    }
}

impl ProbeSystem for ToySystem {
    fn input_dim(&self) -> usize {
        self.engine.config.model.input_dim()
    }

    fn reset(&mut self) -> core::result::Result<(), ResetRefused> {
        if self.refuse_reset {
            return Err(ResetRefused);
        }
        self.engine.state = 0.0;
        self.tick = 0;
        Ok(())
    }

    fn step(&mut self, x: &[f64]) -> Vec<f64> {
        let ctx = match self.context_override {
            Some(c) => Some(c),
            None => self.engine.context(self.tick),
        };
        let (_, y) = self.engine.emit(self.tick, ctx, Some(x));
        self.tick += 1;
        y
    }

    fn set_context(&mut self, value: f64) -> bool {
        self.context_override = Some(value);
        true
    }
}

/// Count of records per context value, handy for checking schedules.
pub fn context_histogram(trace: &Trace, name: &str) -> BTreeMap<i64, usize> {
    let mut h = BTreeMap::new();
    for r in trace.records() {
        if let Some(v) = r.circ.get(name) {
            *h.entry(math::floor(*v * 1000.0 + 0.5) as i64).or_insert(0) += 1;
        }
    }
    h
}
