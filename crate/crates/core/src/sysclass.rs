//! Static / non-stationary / dynamic classification of black-box systems.
//!
//! Passive classification works on a recorded trace in two stages:
//!
//! 1. **Segment test.** The trace is cut into equal temporal segments and
//!    `P(Y|X)` is estimated per segment. If the largest pairwise symmetrized
//!    conditional KL stays at or below `kappa` the system is `Static`.
//! 2. **Memory test.** Otherwise records are partitioned, within each input
//!    cell, by a history signature: the previous `k` inputs, each reduced to
//!    one bit per feature (above / below the feature median). The statistic
//!    is the weighted symmetrized KL between every history partition's output
//!    histogram and the input cell's pooled histogram, averaged over input
//!    cells. Above `kappa` the outputs depend on input history, so the
//!    system is `Dynamic`; otherwise `NonStationary`.
//!
//! Active classification drives a resettable system with paired prefixes
//! and a common terminal input instead, then with a fixed input under
//! different contexts and time offsets.
//!
//! Only the observable consequence of memory (history-dependent outputs) is
//! tested. A system that hides its state perfectly is indistinguishable from
//! a memoryless one here.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::stats::{
    kl_discrete, pooled_symmetrized_kl, Axis, BinningSpec, ConditionalDistribution, Grid, MarginalDistribution,
    DEFAULT_CELL_CAP, DEFAULT_MIN_CELL_COUNT, JEFFREYS_ALPHA,
};
use crate::trace::{Trace, TraceRecord};

pub const DEFAULT_KAPPA: f64 = 0.05;
pub const DEFAULT_SEGMENTS: usize = 4;
pub const HISTORY_LEN: usize = 3;
/// Minimum records per segment.
pub const MIN_SEGMENT_RECORDS: usize = 50;
/// Relative band around `kappa` inside which a statistic counts as marginal.
const MARGINAL_BAND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Static,
    NonStationary,
    Dynamic,
}

impl core::fmt::Display for SystemKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            SystemKind::Static => "static",
            SystemKind::NonStationary => "non-stationary",
            SystemKind::Dynamic => "dynamic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEvidence {
    pub test: String,
    #[serde(with = "crate::serde_float")]
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemClass {
    pub class: SystemKind,
    /// Margin of the decisive statistic over `kappa`, squashed to `[0, 1]`.
    pub confidence: f64,
    pub kappa: f64,
    pub evidence: Vec<ClassEvidence>,
    pub warnings: Vec<String>,
}

fn squash(stat: f64, kappa: f64) -> f64 {
    if !stat.is_finite() {
        return 1.0;
    }
    (1.0 - math::exp(-(stat - kappa).abs() / kappa)).clamp(0.0, 1.0)
}

fn is_marginal(stat: f64, kappa: f64) -> bool {
    (stat - kappa).abs() <= MARGINAL_BAND * kappa
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassiveOptions {
    pub segments: usize,
    pub kappa: f64,
    pub x_bins: usize,
    pub y_bins: usize,
    pub history_len: usize,
    /// Minimum records in a history partition for it to be compared.
    pub min_partition: u64,
    pub n_min: u64,
}

impl Default for PassiveOptions {
    fn default() -> Self {
        PassiveOptions {
            segments: DEFAULT_SEGMENTS,
            kappa: DEFAULT_KAPPA,
            x_bins: 6,
            y_bins: 6,
            history_len: HISTORY_LEN,
            min_partition: 30,
            n_min: DEFAULT_MIN_CELL_COUNT,
        }
    }
}

impl PassiveOptions {
    fn validate(&self) -> Result<()> {
        if self.segments < 2 {
            return Err(Error::param("segments", "need at least 2 segments"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("kappa", "must be > 0"));
        }
        if self.history_len == 0 {
            return Err(Error::param("history_len", "must be at least 1"));
        }
        Ok(())
    }
}

/// [`classify_passive_with`] using default binning and history settings.
pub fn classify_passive(trace: &Trace, segments: usize, kappa: f64) -> Result<SystemClass> {
    classify_passive_with(
        trace,
        &PassiveOptions {
            segments,
            kappa,
            ..PassiveOptions::default()
        },
    )
}

pub fn classify_passive_with(trace: &Trace, opts: &PassiveOptions) -> Result<SystemClass> {
    opts.validate()?;
    let needed = opts.segments * MIN_SEGMENT_RECORDS;
    if trace.len() < needed {
        return Err(Error::TraceTooShort {
            len: trace.len(),
            needed,
        });
    }
    let records = trace.records();
    let fitted = BinningSpec::fit_uniform(records, opts.x_bins, opts.y_bins)?;
    let binning = fitted.spec;
    let mut warnings = fitted.warnings;
    let kappa = opts.kappa;

    let seg = segment_statistic(records, &binning, opts.segments, opts.n_min, &mut warnings)?;
    let mut evidence = vec![ClassEvidence {
        test: String::from("segment_max_symmetrized_kl"),
        statistic: seg,
    }];
    if seg <= kappa {
        return Ok(SystemClass {
            class: SystemKind::Static,
            confidence: squash(seg, kappa),
            kappa,
            evidence,
            warnings,
        });
    }

    let memory = memory_statistic(records, &binning, opts.history_len, opts.min_partition);
    let (class, confidence) = match memory {
        None => {
            warnings.push(String::from("memory test inconclusive"));
            (SystemKind::NonStationary, squash(seg, kappa))
        }
        Some(mem) => {
            evidence.push(ClassEvidence {
                test: String::from("history_partition_symmetrized_kl"),
                statistic: mem,
            });
            if is_marginal(seg, kappa) && is_marginal(mem, kappa) {
                warnings.push(String::from("segment and memory tests both marginal; reporting the weaker class"));
                (SystemKind::NonStationary, squash(seg, kappa).min(squash(mem, kappa)))
            } else if mem > kappa {
                (SystemKind::Dynamic, squash(mem, kappa))
            } else {
                (SystemKind::NonStationary, squash(seg, kappa).min(squash(mem, kappa)))
            }
        }
    };
    Ok(SystemClass {
        class,
        confidence,
        kappa,
        evidence,
        warnings,
    })
}

/// Largest pairwise symmetrized conditional KL between temporal segments.
fn segment_statistic(
    records: &[TraceRecord],
    binning: &BinningSpec,
    segments: usize,
    n_min: u64,
    warnings: &mut Vec<String>,
) -> Result<f64> {
    let len = records.len() / segments;
    let estimates: Vec<ConditionalDistribution> = (0..segments)
        .map(|s| ConditionalDistribution::estimate(&records[s * len..(s + 1) * len], binning))
        .collect::<Result<_>>()?;
    let mut worst: Option<f64> = None;
    let mut skipped = 0;
    for i in 0..segments {
        for j in i + 1..segments {
            match pooled_symmetrized_kl(&estimates[i], &estimates[j], n_min) {
                Ok(kl) => worst = Some(worst.map_or(kl.value, |w: f64| w.max(kl.value))),
                Err(Error::InsufficientOverlap) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} segment pair(s) skipped for insufficient input overlap"));
    }
    worst.ok_or(Error::InsufficientOverlap)
}

fn medians(records: &[TraceRecord]) -> Vec<f64> {
    let dim = records[0].x.len();
    (0..dim)
        .map(|d| {
            let mut v: Vec<f64> = records.iter().map(|r| r.x[d]).filter(|v| v.is_finite()).collect();
            v.sort_by(f64::total_cmp);
            v.get(v.len() / 2).copied().unwrap_or(0.0)
        })
        .collect()
}

fn history_signature(prev: &[TraceRecord], medians: &[f64]) -> Option<u64> {
    let mut sig = 0u64;
    for r in prev {
        for (v, m) in r.x.iter().zip(medians) {
            if !v.is_finite() {
                return None;
            }
            sig = (sig << 1) | u64::from(*v > *m);
        }
    }
    Some(sig)
}

fn smoothed_counts(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let denom = total as f64 + JEFFREYS_ALPHA * counts.len() as f64;
    counts.iter().map(|c| (*c as f64 + JEFFREYS_ALPHA) / denom).collect()
}

fn sym_kl(p: &[f64], q: &[f64]) -> f64 {
    let a = kl_discrete(p, q).unwrap_or(f64::INFINITY);
    let b = kl_discrete(q, p).unwrap_or(f64::INFINITY);
    0.5 * (a + b)
}

/// History-dependence statistic, or `None` when no input cell has two
/// history partitions of sufficient size.
fn memory_statistic(records: &[TraceRecord], binning: &BinningSpec, k: usize, min_partition: u64) -> Option<f64> {
    if records.len() <= k {
        return None;
    }
    let meds = medians(records);
    let y_cells = binning.y.cells();
    // x-cell -> signature -> output histogram
    let mut table: BTreeMap<usize, BTreeMap<u64, Vec<u64>>> = BTreeMap::new();
    for i in k..records.len() {
        let r = &records[i];
        if !r.is_finite() {
            continue;
        }
        let Some(sig) = history_signature(&records[i - k..i], &meds) else {
            continue;
        };
        let (xc, _) = binning.x.locate(&r.x);
        let (yc, _) = binning.y.locate(&r.y);
        table
            .entry(xc)
            .or_default()
            .entry(sig)
            .or_insert_with(|| vec![0; y_cells])[yc] += 1;
    }

    let mut weighted = 0.0;
    let mut mass = 0u64;
    for partitions in table.values() {
        let qualifying: Vec<&Vec<u64>> = partitions
            .values()
            .filter(|h| h.iter().sum::<u64>() >= min_partition)
            .collect();
        if qualifying.len() < 2 {
            continue;
        }
        let mut pooled = vec![0u64; y_cells];
        for h in &qualifying {
            for (p, c) in pooled.iter_mut().zip(h.iter()) {
                *p += c;
            }
        }
        let n_cell: u64 = pooled.iter().sum();
        let pooled_p = smoothed_counts(&pooled);
        let cell_stat: f64 = qualifying
            .iter()
            .map(|h| {
                let n_h: u64 = h.iter().sum();
                n_h as f64 / n_cell as f64 * sym_kl(&smoothed_counts(h), &pooled_p)
            })
            .sum();
        weighted += n_cell as f64 * cell_stat;
        mass += n_cell;
    }
    (mass > 0).then(|| weighted / mass as f64)
}

/// A system reset to a known initial state was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResetRefused;

/// A stateful black box that can be reset and stepped.
pub trait ProbeSystem {
    fn input_dim(&self) -> usize;
    fn reset(&mut self) -> core::result::Result<(), ResetRefused>;
    fn step(&mut self, x: &[f64]) -> Vec<f64>;
    /// Sets an external context value; false if the system has no context input.
    fn set_context(&mut self, _value: f64) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeProtocol {
    pub prefix_pairs: usize,
    pub prefix_len: usize,
    /// Common input fed after each prefix.
    pub terminal: Vec<f64>,
    pub repetitions: usize,
    /// Prefix pair `i` feeds `+(i+1) * amplitude` versus `-(i+1) * amplitude`.
    pub amplitude: f64,
    /// Input used for the context and time-offset probes; defaults to
    /// `amplitude` on every feature.
    pub probe_input: Option<Vec<f64>>,
    pub contexts: Vec<f64>,
    pub time_offsets: Vec<usize>,
    pub y_bins: usize,
    /// Records driven through the system when it refuses to reset.
    pub fallback_records: usize,
    pub seed: u64,
}

impl ProbeProtocol {
    pub fn for_dim(dim: usize) -> Self {
        ProbeProtocol {
            prefix_pairs: 2,
            prefix_len: 10,
            terminal: vec![0.0; dim],
            repetitions: 1000,
            amplitude: 1.0,
            probe_input: None,
            contexts: vec![-1.0, 0.0, 1.0],
            time_offsets: vec![0, 50, 200],
            y_bins: 8,
            fallback_records: 10_000,
            seed: 0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.prefix_pairs == 0 || self.prefix_len == 0 || self.repetitions == 0 {
            return Err(Error::param("protocol", "prefix pairs, prefix length and repetitions must be >= 1"));
        }
        if self.terminal.len() != dim {
            return Err(Error::DimensionMismatch {
                index: 0,
                what: "terminal input",
                expected: dim,
                found: self.terminal.len(),
            });
        }
        if let Some(p) = &self.probe_input {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    index: 0,
                    what: "probe input",
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        if self.y_bins < 2 {
            return Err(Error::param("y_bins", "must be at least 2"));
        }
        Ok(())
    }
}

/// Symmetrized KL between the histograms of two output samples, binned on
/// their pooled range.
pub fn sample_divergence(a: &[Vec<f64>], b: &[Vec<f64>], bins: usize) -> Result<f64> {
    let dim = a.first().or(b.first()).map_or(0, Vec::len);
    if dim == 0 || a.is_empty() || b.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut axes = Vec::with_capacity(dim);
    for d in 0..dim {
        let (lo, hi) = a
            .iter()
            .chain(b)
            .map(|v| v[d])
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let axis = if !lo.is_finite() || hi <= lo {
            Axis::uniform(lo.min(0.0) - 0.5, lo.max(0.0) + 0.5, 1)?
        } else {
            let pad = 0.01 * (hi - lo);
            Axis::uniform(lo - pad, hi + pad, bins)?
        };
        axes.push(axis);
    }
    let grid = Grid::new(axes);
    if grid.cells() as u64 > DEFAULT_CELL_CAP {
        return Err(Error::CellCapExceeded {
            cells: grid.cells() as u128,
            cap: DEFAULT_CELL_CAP,
        });
    }
    let pa = MarginalDistribution::estimate(a.iter().map(Vec::as_slice), &grid)?.smoothed();
    let pb = MarginalDistribution::estimate(b.iter().map(Vec::as_slice), &grid)?.smoothed();
    Ok(sym_kl(&pa, &pb))
}

/// Probes a resettable system. Falls back to passive classification of a
/// driven trace when the system refuses to reset.
pub fn classify_active(system: &mut dyn ProbeSystem, protocol: &ProbeProtocol, kappa: f64) -> Result<SystemClass> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param("kappa", "must be > 0"));
    }
    let dim = system.input_dim();
    protocol.validate(dim)?;
    if system.reset().is_err() {
        return fallback_passive(system, protocol, kappa);
    }

    let mut evidence = Vec::new();
    let mut warnings = Vec::new();

    // Memory: distinct prefixes, common terminal input.
    let mut dyn_stat: f64 = 0.0;
    for pair in 0..protocol.prefix_pairs {
        let level = protocol.amplitude * (pair + 1) as f64;
        let mut samples = [Vec::new(), Vec::new()];
        for (side, sign) in [1.0, -1.0].iter().enumerate() {
            let prefix = vec![sign * level; dim];
            for _ in 0..protocol.repetitions {
                if system.reset().is_err() {
                    return fallback_passive(system, protocol, kappa);
                }
                for _ in 0..protocol.prefix_len {
                    system.step(&prefix);
                }
                samples[side].push(system.step(&protocol.terminal));
            }
        }
        let stat = sample_divergence(&samples[0], &samples[1], protocol.y_bins)?;
        evidence.push(ClassEvidence {
            test: format!("prefix_pair_{pair}"),
            statistic: stat,
        });
        dyn_stat = dyn_stat.max(stat);
    }
    if dyn_stat > kappa {
        return Ok(SystemClass {
            class: SystemKind::Dynamic,
            confidence: squash(dyn_stat, kappa),
            kappa,
            evidence,
            warnings,
        });
    }

    // Non-stationarity: same input, different time offsets and contexts.
    let probe = protocol.probe_input.clone().unwrap_or_else(|| vec![protocol.amplitude; dim]);
    let mut groups: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    for offset in &protocol.time_offsets {
        let mut out = Vec::with_capacity(protocol.repetitions);
        for _ in 0..protocol.repetitions {
            let _ = system.reset();
            for _ in 0..*offset {
                system.step(&probe);
            }
            out.push(system.step(&probe));
        }
        groups.push((format!("offset_{offset}"), out));
    }
    let mut context_supported = true;
    for ctx in &protocol.contexts {
        if !system.set_context(*ctx) {
            context_supported = false;
            break;
        }
        let mut out = Vec::with_capacity(protocol.repetitions);
        for _ in 0..protocol.repetitions {
            let _ = system.reset();
            out.push(system.step(&probe));
        }
        groups.push((format!("context_{ctx}"), out));
    }
    if !context_supported && !protocol.contexts.is_empty() {
        warnings.push(String::from("system has no context input; context probes skipped"));
    }
    let mut ns_stat: f64 = 0.0;
    let split = protocol.time_offsets.len();
    for i in 0..groups.len() {
        for j in i + 1..groups.len() {
            // Offsets compare with offsets, contexts with contexts.
            if (i < split) != (j < split) {
                continue;
            }
            let stat = sample_divergence(&groups[i].1, &groups[j].1, protocol.y_bins)?;
            evidence.push(ClassEvidence {
                test: format!("{}_vs_{}", groups[i].0, groups[j].0),
                statistic: stat,
            });
            ns_stat = ns_stat.max(stat);
        }
    }
    let (class, confidence) = if ns_stat > kappa {
        (SystemKind::NonStationary, squash(ns_stat, kappa))
    } else {
        (SystemKind::Static, squash(dyn_stat.max(ns_stat), kappa))
    };
    Ok(SystemClass {
        class,
        confidence,
        kappa,
        evidence,
        warnings,
    })
}

fn fallback_passive(system: &mut dyn ProbeSystem, protocol: &ProbeProtocol, kappa: f64) -> Result<SystemClass> {
    let dim = system.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut records = Vec::with_capacity(protocol.fallback_records);
    for t in 0..protocol.fallback_records {
        let x: Vec<f64> = (0..dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                protocol.amplitude * z
            })
            .collect();
        let y = system.step(&x);
        records.push(TraceRecord::new(t as i64, x, y));
    }
    let trace = Trace::from_records(records, "active-fallback")?;
    let mut class = classify_passive(&trace, DEFAULT_SEGMENTS, kappa)?;
    class
        .warnings
        .insert(0, String::from("system refused reset; fell back to passive classification"));
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refsys::{generate_trace, ToyConfig, ToySystem};

    #[test]
    fn constant_trace_is_static_with_zero_divergence() {
        let recs = (0..400).map(|t| TraceRecord::new(t, vec![1.0], vec![2.0])).collect();
        let trace = Trace::from_records(recs, "c").unwrap();
        let c = classify_passive(&trace, 4, DEFAULT_KAPPA).unwrap();
        assert_eq!(c.class, SystemKind::Static);
        assert_eq!(c.evidence[0].statistic, 0.0);
    }

    #[test]
    fn short_trace_rejected() {
        let recs = (0..199).map(|t| TraceRecord::new(t, vec![t as f64], vec![0.0])).collect();
        let trace = Trace::from_records(recs, "c").unwrap();
        assert!(matches!(
            classify_passive(&trace, 4, DEFAULT_KAPPA),
            Err(Error::TraceTooShort { needed: 200, .. })
        ));
    }

    #[test]
    fn reference_models_classify() {
        for (cfg, want) in [
            (ToyConfig::static_reference(), SystemKind::Static),
            (ToyConfig::non_stationary_reference(), SystemKind::NonStationary),
            (ToyConfig::dynamic_reference(), SystemKind::Dynamic),
        ] {
            let trace = generate_trace(&cfg, 10_000, 3).unwrap();
            let c = classify_passive(&trace, 4, DEFAULT_KAPPA).unwrap();
            assert_eq!(c.class, want, "{:?}", c);
            assert!((0.0..=1.0).contains(&c.confidence));
        }
    }

    #[test]
    fn passive_is_deterministic() {
        let trace = generate_trace(&ToyConfig::dynamic_reference(), 5_000, 9).unwrap();
        let a = classify_passive(&trace, 4, DEFAULT_KAPPA).unwrap();
        let b = classify_passive(&trace, 4, DEFAULT_KAPPA).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shuffling_destroys_memory_evidence() {
        use rand::seq::SliceRandom;
        let trace = generate_trace(&ToyConfig::dynamic_reference(), 10_000, 4).unwrap();
        assert_eq!(classify_passive(&trace, 4, DEFAULT_KAPPA).unwrap().class, SystemKind::Dynamic);
        let mut recs = trace.into_records();
        let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = recs.iter().map(|r| (r.x.clone(), r.y.clone())).collect();
        pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
        for (r, (x, y)) in recs.iter_mut().zip(pairs) {
            r.x = x;
            r.y = y;
        }
        let shuffled = Trace::from_records(recs, "shuffled").unwrap();
        let c = classify_passive(&shuffled, 4, DEFAULT_KAPPA).unwrap();
        assert_ne!(c.class, SystemKind::Dynamic);
    }

    #[test]
    fn larger_kappa_never_raises_the_class() {
        for cfg in [ToyConfig::non_stationary_reference(), ToyConfig::dynamic_reference()] {
            let trace = generate_trace(&cfg, 6_000, 5).unwrap();
            let mut prev = SystemKind::Dynamic;
            for kappa in [0.01, 0.03, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0] {
                let c = classify_passive(&trace, 4, kappa).unwrap().class;
                assert!(c <= prev, "kappa {kappa}: {c:?} after {prev:?}");
                prev = c;
            }
        }
    }

    #[test]
    fn active_probe_classes() {
        for (cfg, want) in [
            (ToyConfig::static_reference(), SystemKind::Static),
            (ToyConfig::non_stationary_reference(), SystemKind::NonStationary),
            (ToyConfig::dynamic_reference(), SystemKind::Dynamic),
        ] {
            let mut sys = ToySystem::new(cfg, 11).unwrap();
            let c = classify_active(&mut sys, &ProbeProtocol::for_dim(1), DEFAULT_KAPPA).unwrap();
            assert_eq!(c.class, want, "{c:?}");
        }
    }

    #[test]
    fn refused_reset_falls_back() {
        let mut sys = ToySystem::new(ToyConfig::static_reference(), 1).unwrap().refusing_reset();
        let c = classify_active(&mut sys, &ProbeProtocol::for_dim(1), DEFAULT_KAPPA).unwrap();
        assert!(c.warnings[0].contains("refused reset"));
        assert_eq!(c.class, SystemKind::Static);
    }

    #[test]
    fn protocol_validation() {
        let mut sys = ToySystem::new(ToyConfig::static_reference(), 1).unwrap();
        let mut p = ProbeProtocol::for_dim(2);
        assert!(classify_active(&mut sys, &p, DEFAULT_KAPPA).is_err());
        p = ProbeProtocol::for_dim(1);
        p.repetitions = 0;
        assert!(classify_active(&mut sys, &p, DEFAULT_KAPPA).is_err());
    }
}
