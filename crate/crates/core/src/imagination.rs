//! Misuse detection and hazard imagination.
//!
//! A record that fails the reference OOD checks is a misuse. Instead of
//! passing it on, the pipeline consults a knowledge base of declarative
//! hazard templates, builds synthetic inputs from the last valid state,
//! scores them by `prior * plausibility * severity` and emits the top-k as
//! substitute inputs for a downstream consumer.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{self, Fnv64};
use crate::monitor::{classify_ood_record, OodTag, ReferenceProfile};
use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferStat {
    Mean,
    Min,
    Max,
    /// Value in the last valid record.
    Last,
    /// Least-squares slope per record over the valid records.
    Trend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Comparison {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparison::Gt => lhs > rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Le => lhs <= rhs,
        }
    }
}

/// `stat(input[feature]) op value` over the runtime buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub stat: BufferStat,
    pub op: Comparison,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    Offset { feature: usize, value: f64 },
    Scale { feature: usize, factor: f64 },
    Set { feature: usize, value: f64 },
    /// Adds seeded Gaussian noise with standard deviation `std`.
    Gaussian { feature: usize, std: f64 },
}

impl Perturbation {
    fn feature(&self) -> usize {
        match *self {
            Perturbation::Offset { feature, .. }
            | Perturbation::Scale { feature, .. }
            | Perturbation::Set { feature, .. }
            | Perturbation::Gaussian { feature, .. } => feature,
        }
    }

    fn apply(&self, x: &mut [f64], rng: &mut ChaCha8Rng) {
        match *self {
            Perturbation::Offset { feature, value } => x[feature] += value,
            Perturbation::Scale { feature, factor } => x[feature] *= factor,
            Perturbation::Set { feature, value } => x[feature] = value,
            Perturbation::Gaussian { feature, std } => {
                let z: f64 = StandardNormal.sample(rng);
                x[feature] += std * z;
            }
        }
    }
}

/// A knowledge-base entry: when all `conditions` hold on the buffer, the
/// last valid input perturbed by `perturbations` is a plausible hazard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardTemplate {
    pub id: String,
    /// Conjunction; empty means always applicable.
    #[serde(default)]
    pub conditions: Vec<Condition>,
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    pub prior: f64,
    pub severity: f64,
}

impl HazardTemplate {
    pub fn validate(&self, input_dim: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidTemplate {
            id: self.id.clone(),
            reason,
        };
        if self.id.is_empty() {
            return Err(bad(String::from("id must not be empty")));
        }
        for (name, v) in [("prior", self.prior), ("severity", self.severity)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        for c in &self.conditions {
            if c.feature >= input_dim {
                return Err(bad(format!("condition feature {} out of range for dimension {input_dim}", c.feature)));
            }
            if c.value.is_nan() {
                return Err(bad(String::from("condition value is NaN")));
            }
        }
        for p in &self.perturbations {
            if p.feature() >= input_dim {
                return Err(bad(format!("perturbation feature {} out of range for dimension {input_dim}", p.feature())));
            }
            let finite = match *p {
                Perturbation::Offset { value, .. } | Perturbation::Set { value, .. } => value.is_finite(),
                Perturbation::Scale { factor, .. } => factor.is_finite(),
                Perturbation::Gaussian { std, .. } => std.is_finite() && std >= 0.0,
            };
            if !finite {
                return Err(bad(String::from("perturbation parameter must be finite (std >= 0)")));
            }
        }
        Ok(())
    }
}

/// Checks every template of a knowledge base and rejects duplicate ids.
pub fn validate_kb(kb: &[HazardTemplate], input_dim: usize) -> Result<()> {
    let mut ids = BTreeSet::new();
    for t in kb {
        t.validate(input_dim)?;
        if !ids.insert(t.id.as_str()) {
            return Err(Error::InvalidTemplate {
                id: t.id.clone(),
                reason: String::from("duplicate id"),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct BufferEntry {
    record: TraceRecord,
    valid: bool,
}

/// The last `capacity` records in arrival order, plus the most recent valid
/// record (kept even after it leaves the ring).
#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeBuffer {
    capacity: usize,
    entries: VecDeque<BufferEntry>,
    last_valid: Option<TraceRecord>,
}

impl RuntimeBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("capacity", "must be at least 1"));
        }
        Ok(RuntimeBuffer {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            last_valid: None,
        })
    }

    pub fn push(&mut self, record: TraceRecord, valid: bool) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        if valid {
            self.last_valid = Some(record.clone());
        }
        self.entries.push_back(BufferEntry { record, valid });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn last_valid(&self) -> Option<&TraceRecord> {
        self.last_valid.as_ref()
    }

    pub fn records(&self) -> impl Iterator<Item = &TraceRecord> {
        self.entries.iter().map(|e| &e.record)
    }

    fn valid_values(&self, feature: usize) -> impl Iterator<Item = f64> + '_ {
        self.entries
            .iter()
            .filter(|e| e.valid)
            .filter_map(move |e| e.record.x.get(feature).copied())
            .filter(|v| v.is_finite())
    }

    /// `None` when no valid record carries a finite value for `feature`.
    pub fn statistic(&self, feature: usize, stat: BufferStat) -> Option<f64> {
        match stat {
            BufferStat::Mean => math::mean_std(self.valid_values(feature)).map(|(m, _)| m),
            BufferStat::Min => self.valid_values(feature).reduce(f64::min),
            BufferStat::Max => self.valid_values(feature).reduce(f64::max),
            BufferStat::Last => self.last_valid.as_ref().and_then(|r| r.x.get(feature).copied()),
            BufferStat::Trend => {
                let ys: Vec<f64> = self.valid_values(feature).collect();
                if ys.len() < 2 {
                    return Some(0.0);
                }
                let n = ys.len() as f64;
                let mx = (n - 1.0) / 2.0;
                let my = ys.iter().sum::<f64>() / n;
                let (mut sxy, mut sxx) = (0.0, 0.0);
                for (i, y) in ys.iter().enumerate() {
                    let dx = i as f64 - mx;
                    sxy += dx * (y - my);
                    sxx += dx * dx;
                }
                Some(sxy / sxx)
            }
        }
    }

    /// Content hash of the valid records and the last-valid marker.
    fn content_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        let write = |r: &TraceRecord, h: &mut Fnv64| {
            h.write_i64(r.t);
            r.x.iter().chain(&r.y).for_each(|v| h.write_f64(*v));
        };
        for e in self.entries.iter().filter(|e| e.valid) {
            write(&e.record, &mut h);
        }
        if let Some(r) = &self.last_valid {
            h.write(b"last");
            write(r, &mut h);
        }
        h.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImaginedCase {
    pub template_id: String,
    #[serde(with = "crate::serde_float::vec")]
    pub input: Vec<f64>,
    pub prior: f64,
    pub probability: f64,
    pub severity: f64,
    pub risk: f64,
    pub scored: bool,
    /// The input fell outside the binning support and was clamped for scoring.
    #[serde(default)]
    pub clamped: bool,
}

fn applicable(t: &HazardTemplate, buffer: &RuntimeBuffer) -> bool {
    t.conditions.iter().all(|c| {
        buffer
            .statistic(c.feature, c.stat)
            .is_some_and(|v| c.op.holds(v, c.value))
    })
}

/// One unscored case per applicable template, in knowledge-base order.
pub fn imagine_hazards(buffer: &RuntimeBuffer, kb: &[HazardTemplate]) -> Result<Vec<ImaginedCase>> {
    let base = buffer.last_valid().ok_or(Error::NoLastValidState)?;
    let buffer_hash = buffer.content_hash();
    let mut out = Vec::new();
    for t in kb.iter().filter(|t| applicable(t, buffer)) {
        let mut h = Fnv64::new();
        h.write(&buffer_hash.to_le_bytes());
        h.write(t.id.as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let mut input = base.x.clone();
        for p in &t.perturbations {
            if p.feature() >= input.len() {
                return Err(Error::InvalidTemplate {
                    id: t.id.clone(),
                    reason: format!("perturbation feature {} out of range", p.feature()),
                });
            }
            p.apply(&mut input, &mut rng);
        }
        out.push(ImaginedCase {
            template_id: t.id.clone(),
            input,
            prior: t.prior,
            probability: 0.0,
            severity: t.severity,
            risk: 0.0,
            scored: false,
            clamped: false,
        });
    }
    Ok(out)
}

/// `prior * p_ref(cell(x)) / p_ref(modal cell)` and whether `x` had to be
/// clamped into the binning.
pub fn evaluate_probability(case: &ImaginedCase, profile: &ReferenceProfile) -> (f64, bool) {
    let (cell, inside) = profile.binning.x.locate(&case.input);
    let plausibility = profile.input.probability(cell) / profile.input.modal_probability();
    ((case.prior * plausibility).clamp(0.0, 1.0), !inside)
}

pub fn score_case(mut case: ImaginedCase, profile: &ReferenceProfile) -> ImaginedCase {
    let (p, clamped) = evaluate_probability(&case, profile);
    case.probability = p;
    case.risk = p * case.severity;
    case.scored = true;
    case.clamped = clamped;
    case
}

/// Top `k` cases by risk, ties broken by template id. An empty input yields
/// an empty selection and a warning.
pub fn select_high_risk(mut cases: Vec<ImaginedCase>, k: usize) -> Result<(Vec<ImaginedCase>, Option<String>)> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if cases.is_empty() {
        return Ok((cases, Some(String::from("no imagined cases to select from"))));
    }
    cases.sort_by(|a, b| b.risk.total_cmp(&a.risk).then_with(|| a.template_id.cmp(&b.template_id)));
    cases.truncate(k);
    Ok((cases, None))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCase {
    pub index: usize,
    pub record: TraceRecord,
    pub tags: BTreeSet<OodTag>,
}

/// OOD-based misuse detection with a log of every misused record.
#[derive(Debug, Clone)]
pub struct MisuseDetector<'p> {
    profile: &'p ReferenceProfile,
    critical: Vec<CriticalCase>,
    seen: usize,
}

impl<'p> MisuseDetector<'p> {
    pub fn new(profile: &'p ReferenceProfile) -> Self {
        MisuseDetector {
            profile,
            critical: Vec::new(),
            seen: 0,
        }
    }

    /// `(misuse, tags)`; misuse iff the tag set is non-empty.
    pub fn detect(&mut self, record: &TraceRecord) -> (bool, BTreeSet<OodTag>) {
        let tags = classify_ood_record(record, self.profile);
        let misuse = !tags.is_empty();
        if misuse {
            self.critical.push(CriticalCase {
                index: self.seen,
                record: record.clone(),
                tags: tags.clone(),
            });
        }
        self.seen += 1;
        (misuse, tags)
    }

    pub fn critical_cases(&self) -> &[CriticalCase] {
        &self.critical
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub index: usize,
    pub t: i64,
    pub misuse: bool,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub tags: BTreeSet<OodTag>,
    /// The record's input, unmodified, when it passed the checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substitute_inputs: Vec<ImaginedCase>,
    /// Misuse with no valid state to imagine from.
    #[serde(default)]
    pub degraded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub const DEFAULT_BUFFER_CAPACITY: usize = 100;

/// Sequential misuse-detection and imagination state machine for one stream.
#[derive(Debug, Clone)]
pub struct Pipeline<'p> {
    detector: MisuseDetector<'p>,
    buffer: RuntimeBuffer,
    kb: Vec<HazardTemplate>,
    top_k: usize,
    profile: &'p ReferenceProfile,
}

impl<'p> Pipeline<'p> {
    pub fn new(profile: &'p ReferenceProfile, kb: Vec<HazardTemplate>, top_k: usize, capacity: usize) -> Result<Self> {
        validate_kb(&kb, profile.binning.x.dims())?;
        if top_k == 0 {
            return Err(Error::param("top_k", "must be at least 1"));
        }
        Ok(Pipeline {
            detector: MisuseDetector::new(profile),
            buffer: RuntimeBuffer::new(capacity)?,
            kb,
            top_k,
            profile,
        })
    }

    pub fn process(&mut self, record: &TraceRecord) -> Result<PipelineOutput> {
        let index = self.detector.seen;
        let (misuse, tags) = self.detector.detect(record);
        let mut out = PipelineOutput {
            index,
            t: record.t,
            misuse,
            tags,
            input: None,
            substitute_inputs: Vec::new(),
            degraded: false,
            warnings: Vec::new(),
        };
        if !misuse {
            out.input = Some(record.x.clone());
        } else {
            match imagine_hazards(&self.buffer, &self.kb) {
                Ok(cases) => {
                    let scored = cases.into_iter().map(|c| score_case(c, self.profile)).collect();
                    let (top, warning) = select_high_risk(scored, self.top_k)?;
                    out.substitute_inputs = top;
                    out.warnings.extend(warning);
                }
                Err(Error::NoLastValidState) => {
                    out.degraded = true;
                    out.warnings.push(String::from("no last-valid state; cannot imagine substitutes"));
                }
                Err(e) => return Err(e),
            }
        }
        self.buffer.push(record.clone(), !misuse);
        Ok(out)
    }

    pub fn buffer(&self) -> &RuntimeBuffer {
        &self.buffer
    }

    pub fn critical_cases(&self) -> &[CriticalCase] {
        self.detector.critical_cases()
    }
}

/// Runs a fresh [`Pipeline`] over `records`.
pub fn run_pipeline<'a>(
    records: impl IntoIterator<Item = &'a TraceRecord>,
    profile: &ReferenceProfile,
    kb: &[HazardTemplate],
    top_k: usize,
) -> Result<Vec<PipelineOutput>> {
    let mut p = Pipeline::new(profile, kb.to_vec(), top_k, DEFAULT_BUFFER_CAPACITY)?;
    records.into_iter().map(|r| p.process(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::build_reference;
    use crate::refsys::{generate_trace, ToyConfig};
    use crate::stats::BinningSpec;
    use alloc::vec;
    use proptest::prelude::*;

    fn profile() -> &'static ReferenceProfile {
        use std::sync::OnceLock;
        static P: OnceLock<ReferenceProfile> = OnceLock::new();
        P.get_or_init(|| {
            let dev = generate_trace(&ToyConfig::static_reference(), 5_000, 11).unwrap();
            let b = BinningSpec::fit_uniform(dev.records(), 8, 4).unwrap().spec;
            build_reference(&dev, &b, "dev").unwrap()
        })
    }

    fn rec(t: i64, x: f64) -> TraceRecord {
        TraceRecord::new(t, vec![x], vec![x])
    }

    fn template(id: &str, prior: f64, severity: f64) -> HazardTemplate {
        HazardTemplate {
            id: id.into(),
            conditions: vec![],
            perturbations: vec![Perturbation::Offset { feature: 0, value: 0.5 }],
            prior,
            severity,
        }
    }

    fn case(id: &str, risk: f64) -> ImaginedCase {
        ImaginedCase {
            template_id: id.into(),
            input: vec![0.0],
            prior: 1.0,
            probability: risk,
            severity: 1.0,
            risk,
            scored: true,
            clamped: false,
        }
    }

    #[test]
    fn buffer_is_bounded_and_ordered() {
        let mut b = RuntimeBuffer::new(3).unwrap();
        for t in 0..10 {
            b.push(rec(t, t as f64), t != 9);
        }
        assert_eq!(b.len(), 3);
        let ts: Vec<_> = b.records().map(|r| r.t).collect();
        assert_eq!(ts, [7, 8, 9]);
        assert_eq!(b.last_valid().unwrap().t, 8);
        assert_eq!(b.statistic(0, BufferStat::Mean), Some(7.5));
        assert_eq!(b.statistic(0, BufferStat::Trend), Some(1.0));
        assert_eq!(b.statistic(0, BufferStat::Max), Some(8.0));
    }

    #[test]
    fn imagination_follows_kb() {
        let mut b = RuntimeBuffer::new(10).unwrap();
        assert_eq!(imagine_hazards(&b, &[]), Err(Error::NoLastValidState));
        for t in 0..5 {
            b.push(rec(t, 1.0), true);
        }
        assert!(imagine_hazards(&b, &[]).unwrap().is_empty());
        let cases = imagine_hazards(&b, &[template("a", 1.0, 1.0)]).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].input, [1.5]);
        let mut gated = template("b", 1.0, 1.0);
        gated.conditions.push(Condition {
            feature: 0,
            stat: BufferStat::Mean,
            op: Comparison::Gt,
            value: 5.0,
        });
        assert!(imagine_hazards(&b, &[gated]).unwrap().is_empty());
    }

    #[test]
    fn gaussian_perturbation_is_seeded_by_content() {
        let mut b = RuntimeBuffer::new(10).unwrap();
        b.push(rec(0, 0.3), true);
        let mut t = template("g", 1.0, 1.0);
        t.perturbations = vec![Perturbation::Gaussian { feature: 0, std: 1.0 }];
        let a = imagine_hazards(&b, &[t.clone()]).unwrap();
        assert_eq!(a, imagine_hazards(&b, &[t.clone()]).unwrap());
        b.push(rec(1, 0.4), true);
        assert_ne!(a[0].input, imagine_hazards(&b, &[t]).unwrap()[0].input);
    }

    #[test]
    fn probability_examples() {
        let p = profile();
        let modal_cell = *p.input.counts().iter().max_by_key(|(_, n)| **n).unwrap().0;
        let axis = &p.binning.x.axes()[0];
        let centre = 0.5 * (axis.edges()[modal_cell] + axis.edges()[modal_cell + 1]);
        let mut c = case("m", 0.0);
        c.input = vec![centre];
        assert_eq!(evaluate_probability(&c, p), (1.0, false));
        c.prior = 0.5;
        assert_eq!(evaluate_probability(&c, p).0, 0.5);
        c.input = vec![1e6];
        let (prob, clamped) = evaluate_probability(&c, p);
        assert!(clamped && prob < 0.05);
    }

    #[test]
    fn selection_rules() {
        let (top, w) = select_high_risk(vec![case("a", 0.9), case("b", 0.2), case("c", 0.5)], 2).unwrap();
        assert!(w.is_none());
        assert_eq!(top.iter().map(|c| c.risk).collect::<Vec<_>>(), [0.9, 0.5]);
        let (top, _) = select_high_risk(vec![case("z", 0.4), case("a", 0.4)], 5).unwrap();
        assert_eq!(top.iter().map(|c| c.template_id.as_str()).collect::<Vec<_>>(), ["a", "z"]);
        let (top, w) = select_high_risk(vec![], 3).unwrap();
        assert!(top.is_empty() && w.is_some());
        assert!(select_high_risk(vec![], 0).is_err());
    }

    #[test]
    fn template_validation() {
        assert!(template("a", 1.5, 0.5).validate(1).is_err());
        assert!(template("a", 0.5, -0.1).validate(1).is_err());
        assert!(template("a", 0.5, 0.5).validate(0).is_err());
        assert!(validate_kb(&[template("a", 0.5, 0.5), template("a", 0.1, 0.1)], 1).is_err());
    }

    #[test]
    fn pipeline_behaviour() {
        let p = profile();
        let kb = vec![template("a", 0.8, 0.5)];
        // Misuse on the first record: nothing to imagine from.
        let first = run_pipeline(&[rec(0, f64::NAN)], p, &kb, 3).unwrap();
        assert!(first[0].misuse && first[0].degraded && first[0].substitute_inputs.is_empty());

        let stream = vec![rec(0, 0.1), rec(1, -0.2), rec(2, f64::NAN), rec(3, 0.3)];
        let out = run_pipeline(&stream, p, &kb, 3).unwrap();
        assert_eq!(out[0].input.as_deref(), Some(&[0.1][..]));
        assert!(!out[1].misuse);
        assert!(out[2].misuse && !out[2].degraded);
        assert_eq!(out[2].tags.iter().copied().collect::<Vec<_>>(), [OodTag::DataCharacteristics]);
        assert_eq!(out[2].substitute_inputs.len(), 1);
        assert_eq!(out[2].substitute_inputs[0].input, [0.3]);
        let c = &out[2].substitute_inputs[0];
        assert_eq!(c.risk, c.probability * c.severity);
        assert_eq!(out[3].input.as_deref(), Some(&[0.3][..]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn risk_is_exact_product_and_replay_is_deterministic(
            xs in proptest::collection::vec(prop_oneof![4 => -3.0..3.0f64, 1 => Just(f64::NAN), 1 => Just(40.0)], 1..60),
            priors in proptest::collection::vec((0.0..=1.0f64, 0.0..=1.0f64, -1.0..1.0f64), 1..5),
            k in 1usize..4,
        ) {
            let kb: Vec<_> = priors.iter().enumerate().map(|(i, (p, s, off))| HazardTemplate {
                id: format!("t{i}"),
                conditions: vec![],
                perturbations: vec![Perturbation::Offset { feature: 0, value: *off }, Perturbation::Gaussian { feature: 0, std: 0.2 }],
                prior: *p,
                severity: *s,
            }).collect();
            let stream: Vec<_> = xs.iter().enumerate().map(|(t, x)| rec(t as i64, *x)).collect();
            let a = run_pipeline(&stream, profile(), &kb, k).unwrap();
            let b = run_pipeline(&stream, profile(), &kb, k).unwrap();
            prop_assert_eq!(&a, &b);
            let mut buffer = RuntimeBuffer::new(5).unwrap();
            for (o, r) in a.iter().zip(&stream) {
                for c in &o.substitute_inputs {
                    prop_assert!(c.risk == c.probability * c.severity);
                    prop_assert!((0.0..=1.0).contains(&c.probability));
                }
                prop_assert!(o.substitute_inputs.len() <= k);
                if !o.misuse {
                    prop_assert_eq!(o.input.as_ref().unwrap(), &r.x);
                }
                buffer.push(r.clone(), !o.misuse);
                prop_assert!(buffer.len() <= 5);
            }
        }
    }
}
