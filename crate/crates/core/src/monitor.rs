//! Reference-vs-runtime monitoring: windowed shift labels and per-record
//! out-of-distribution tags.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    conditional_kl_with, kl_discrete, BinningSpec, ConditionalDistribution, MarginalDistribution,
};
use crate::trace::{Trace, TraceRecord};

pub const MIN_REFERENCE_RECORDS: usize = 1000;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// Percentile of per-record input densities used as the outlier floor.
pub const FLOOR_PERCENTILE: f64 = 0.01;
/// Records a window and the reference both need in an input cell before
/// that cell's conditionals are compared.
pub const MONITOR_MIN_CELL_COUNT: u64 = 20;
/// Default bins per input and output dimension, calibrated on no-shift runs
/// of the toy models at a window width of 500.
pub const DEFAULT_MONITOR_X_BINS: usize = 12;
pub const DEFAULT_MONITOR_Y_BINS: usize = 4;

/// Development-time reference distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub binning: BinningSpec,
    pub input: MarginalDistribution,
    pub output: MarginalDistribution,
    pub conditional: ConditionalDistribution,
    /// Smoothed input-cell probability below which a record is an outlier.
    pub density_floor: f64,
    pub provenance: String,
    /// Per-feature admissible input range; values outside are tagged
    /// `data_characteristics`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_ranges: Option<Vec<(f64, f64)>>,
    pub records: usize,
}

/// Builds the reference from finite records of `dev`. Needs at least
/// [`MIN_REFERENCE_RECORDS`] of them.
pub fn build_reference(dev: &Trace, binning: &BinningSpec, provenance: &str) -> Result<ReferenceProfile> {
    if dev.x_dim() != binning.x.dims() || dev.y_dim() != binning.y.dims() {
        return Err(Error::BinningMismatch);
    }
    let finite: Vec<&TraceRecord> = dev.records().iter().filter(|r| r.is_finite()).collect();
    if finite.len() < MIN_REFERENCE_RECORDS {
        return Err(Error::TraceTooShort {
            len: finite.len(),
            needed: MIN_REFERENCE_RECORDS,
        });
    }
    let conditional = ConditionalDistribution::estimate_iter(finite.iter().copied(), binning)?;
    let input = MarginalDistribution::estimate(finite.iter().map(|r| r.x.as_slice()), &binning.x)?;
    let output = MarginalDistribution::estimate(finite.iter().map(|r| r.y.as_slice()), &binning.y)?;
    let mut densities: Vec<f64> = finite.iter().map(|r| input.probability(binning.x.locate(&r.x).0)).collect();
    densities.sort_by(f64::total_cmp);
    let rank = (FLOOR_PERCENTILE * (densities.len() - 1) as f64) as usize;
    Ok(ReferenceProfile {
        binning: binning.clone(),
        input,
        output,
        conditional,
        density_floor: densities[rank],
        provenance: String::from(provenance),
        declared_ranges: None,
        records: finite.len(),
    })
}

impl ReferenceProfile {
    pub fn with_declared_ranges(mut self, ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.len() != self.binning.x.dims() {
            return Err(Error::param("declared_ranges", "one range per input feature is required"));
        }
        if ranges.iter().any(|(lo, hi)| !(lo <= hi)) {
            return Err(Error::param("declared_ranges", "each range needs low <= high"));
        }
        self.declared_ranges = Some(ranges);
        Ok(self)
    }

    /// Smoothed reference probability of the input cell holding `x`.
    pub fn input_density(&self, x: &[f64]) -> f64 {
        self.input.probability(self.binning.x.locate(x).0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OodTag {
    /// Non-finite or outside the declared range.
    DataCharacteristics,
    /// Inside the binning but in a cell the reference rarely visits.
    Outlier,
    /// Outside the binning support.
    UnknownClass,
}

impl fmt::Display for OodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OodTag::DataCharacteristics => "data_characteristics",
            OodTag::Outlier => "outlier",
            OodTag::UnknownClass => "unknown_class",
        })
    }
}

/// Record-level tags judged on the input features only.
pub fn classify_ood_record(record: &TraceRecord, profile: &ReferenceProfile) -> BTreeSet<OodTag> {
    classify_ood_with_floor(record, profile, profile.density_floor)
}

pub fn classify_ood_with_floor(record: &TraceRecord, profile: &ReferenceProfile, floor: f64) -> BTreeSet<OodTag> {
    let mut tags = BTreeSet::new();
    let x = &record.x;
    if x.len() != profile.binning.x.dims() || x.iter().any(|v| !v.is_finite()) {
        tags.insert(OodTag::DataCharacteristics);
        return tags;
    }
    if let Some(ranges) = &profile.declared_ranges {
        if x.iter().zip(ranges).any(|(v, (lo, hi))| v < lo || v > hi) {
            tags.insert(OodTag::DataCharacteristics);
        }
    }
    let (cell, inside) = profile.binning.x.locate(x);
    if !inside {
        tags.insert(OodTag::UnknownClass);
    } else if profile.input.probability(cell) < floor {
        tags.insert(OodTag::Outlier);
    }
    tags
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftLabel {
    None,
    Covariate,
    Target,
    Concept,
    Mixed,
}

impl fmt::Display for ShiftLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShiftLabel::None => "none",
            ShiftLabel::Covariate => "covariate",
            ShiftLabel::Target => "target",
            ShiftLabel::Concept => "concept",
            ShiftLabel::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftThresholds {
    pub input: f64,
    pub output: f64,
    pub conditional: f64,
}

impl Default for ShiftThresholds {
    fn default() -> Self {
        ShiftThresholds {
            input: DEFAULT_THRESHOLD,
            output: DEFAULT_THRESHOLD,
            conditional: DEFAULT_THRESHOLD,
        }
    }
}

impl ShiftThresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("theta_x", self.input), ("theta_y", self.output), ("theta_c", self.conditional)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// A conditional change dominates; marginal changes are labelled only
    /// when the conditional is stable.
    pub fn label(&self, input_kl: f64, output_kl: f64, conditional_kl: f64) -> ShiftLabel {
        if conditional_kl > self.conditional {
            if input_kl > self.input {
                ShiftLabel::Mixed
            } else {
                ShiftLabel::Concept
            }
        } else if input_kl > self.input {
            ShiftLabel::Covariate
        } else if output_kl > self.output {
            ShiftLabel::Target
        } else {
            ShiftLabel::None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub window: usize,
    pub first_t: i64,
    pub last_t: i64,
    #[serde(with = "crate::serde_float")]
    pub input_kl: f64,
    #[serde(with = "crate::serde_float")]
    pub output_kl: f64,
    #[serde(with = "crate::serde_float")]
    pub conditional_kl: f64,
    /// Window input mass skipped by the conditional comparison.
    pub conditional_excluded_mass: f64,
    pub label: ShiftLabel,
    /// Stream indices of records carrying at least one OOD tag.
    pub flagged: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Incremental monitor over non-overlapping windows of `width` records.
#[derive(Debug, Clone)]
pub struct Monitor<'p> {
    profile: &'p ReferenceProfile,
    width: usize,
    thresholds: ShiftThresholds,
    pending: Vec<TraceRecord>,
    flagged: Vec<usize>,
    seen: usize,
    windows: usize,
    n_min: u64,
}

impl<'p> Monitor<'p> {
    pub fn new(profile: &'p ReferenceProfile, width: usize, thresholds: ShiftThresholds) -> Result<Self> {
        if width == 0 {
            return Err(Error::param("width", "must be at least 1"));
        }
        thresholds.validate()?;
        Ok(Monitor {
            profile,
            width,
            thresholds,
            pending: Vec::with_capacity(width),
            flagged: Vec::new(),
            seen: 0,
            windows: 0,
            n_min: MONITOR_MIN_CELL_COUNT,
        })
    }

    /// Ingests one record; returns the report of the window it completes.
    pub fn push(&mut self, record: TraceRecord) -> Result<Option<ShiftReport>> {
        let (xd, yd) = (self.profile.binning.x.dims(), self.profile.binning.y.dims());
        if record.x.len() != xd || record.y.len() != yd {
            return Err(Error::DimensionMismatch {
                index: self.seen,
                what: if record.x.len() != xd { "x" } else { "y" },
                expected: if record.x.len() != xd { xd } else { yd },
                found: if record.x.len() != xd { record.x.len() } else { record.y.len() },
            });
        }
        if !classify_ood_record(&record, self.profile).is_empty() {
            self.flagged.push(self.seen);
        }
        self.seen += 1;
        self.pending.push(record);
        if self.pending.len() < self.width {
            return Ok(None);
        }
        let report = self.close_window()?;
        self.pending.clear();
        self.flagged.clear();
        self.windows += 1;
        Ok(Some(report))
    }

    pub fn with_min_cell_count(mut self, n_min: u64) -> Self {
        self.n_min = n_min.max(1);
        self
    }

    /// Records received but not yet part of a completed window.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    fn close_window(&self) -> Result<ShiftReport> {
        let p = self.profile;
        let mut warnings = Vec::new();
        let finite: Vec<&TraceRecord> = self.pending.iter().filter(|r| r.is_finite()).collect();
        let first_t = self.pending[0].t;
        let last_t = self.pending[self.pending.len() - 1].t;
        if finite.is_empty() {
            warnings.push(String::from("window holds no finite record; statistics set to infinity"));
            return Ok(ShiftReport {
                window: self.windows,
                first_t,
                last_t,
                input_kl: f64::INFINITY,
                output_kl: f64::INFINITY,
                conditional_kl: f64::INFINITY,
                conditional_excluded_mass: 1.0,
                label: ShiftLabel::Mixed,
                flagged: self.flagged.clone(),
                warnings,
            });
        }
        if finite.len() < self.pending.len() {
            warnings.push(format!("{} non-finite record(s) left out of the statistics", self.pending.len() - finite.len()));
        }
        let input = MarginalDistribution::estimate(finite.iter().map(|r| r.x.as_slice()), &p.binning.x)?;
        let output = MarginalDistribution::estimate(finite.iter().map(|r| r.y.as_slice()), &p.binning.y)?;
        let input_kl = kl_discrete(&input.smoothed(), &p.input.smoothed())?;
        let output_kl = kl_discrete(&output.smoothed(), &p.output.smoothed())?;
        // Out-of-support inputs would be clamped into edge cells and distort
        // the conditional there; they are judged by their OOD tags instead.
        // Cells are weighted by where the window's data lies, so cells the
        // window barely visits cannot dominate.
        let supported = finite.iter().copied().filter(|r| p.binning.x.contains(&r.x));
        let compared = match ConditionalDistribution::estimate_iter(supported, &p.binning) {
            Ok(cond) => conditional_kl_with(&cond, &p.conditional, &cond.input_marginal(), self.n_min),
            Err(Error::EmptyTrace) => Err(Error::InsufficientOverlap),
            Err(e) => Err(e),
        };
        let (conditional_kl, excluded) =
            match compared {
                Ok(c) => (c.value, c.excluded_mass),
                Err(Error::InsufficientOverlap) => {
                    warnings.push(String::from("no well-populated input cell shared with the reference"));
                    (0.0, 1.0)
                }
                Err(e) => return Err(e),
            };
        Ok(ShiftReport {
            window: self.windows,
            first_t,
            last_t,
            input_kl,
            output_kl,
            conditional_kl,
            conditional_excluded_mass: excluded,
            label: self.thresholds.label(input_kl, output_kl, conditional_kl),
            flagged: self.flagged.clone(),
            warnings,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRun {
    pub reports: Vec<ShiftReport>,
    pub warnings: Vec<String>,
}

/// Runs a [`Monitor`] over `records`; a trailing partial window is reported
/// as a warning.
pub fn monitor_stream<'a>(
    records: impl IntoIterator<Item = &'a TraceRecord>,
    profile: &ReferenceProfile,
    width: usize,
    thresholds: ShiftThresholds,
) -> Result<MonitorRun> {
    let mut m = Monitor::new(profile, width, thresholds)?;
    let mut reports = Vec::new();
    for r in records {
        if let Some(rep) = m.push(r.clone())? {
            reports.push(rep);
        }
    }
    let mut warnings = Vec::new();
    if reports.is_empty() {
        warnings.push(format!("stream shorter than one window of {width} records; no report produced"));
    } else if m.pending() > 0 {
        warnings.push(format!("{} trailing record(s) do not fill a window", m.pending()));
    }
    Ok(MonitorRun { reports, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refsys::{generate_trace, InputProcess, Intervention, PsdKnobs, ToyConfig};
    use alloc::vec;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn static_dev() -> (Trace, ReferenceProfile) {
        let dev = generate_trace(&ToyConfig::static_reference(), 10_000, 1).unwrap();
        let b = BinningSpec::fit_uniform(dev.records(), DEFAULT_MONITOR_X_BINS, DEFAULT_MONITOR_Y_BINS).unwrap().spec;
        let p = build_reference(&dev, &b, "dev").unwrap();
        (dev, p)
    }

    #[test]
    fn self_comparison_is_quiet() {
        let (dev, p) = static_dev();
        let run = monitor_stream(dev.records(), &p, 500, ShiftThresholds::default()).unwrap();
        assert_eq!(run.reports.len(), 20);
        let quiet = run.reports.iter().filter(|r| r.label == ShiftLabel::None).count();
        assert!(quiet * 100 >= 95 * run.reports.len());
        let whole = monitor_stream(dev.records(), &p, 10_000, ShiftThresholds::default()).unwrap();
        assert!(whole.reports[0].conditional_kl < 1e-12);
        assert!(whole.reports[0].input_kl < 1e-12);
    }

    #[test]
    fn short_reference_rejected() {
        let dev = generate_trace(&ToyConfig::static_reference(), 999, 1).unwrap();
        let b = BinningSpec::fit_uniform(dev.records(), 6, 6).unwrap().spec;
        assert!(matches!(build_reference(&dev, &b, "dev"), Err(Error::TraceTooShort { .. })));
    }

    #[test]
    fn label_matrix() {
        let th = ShiftThresholds::default();
        assert_eq!(th.label(0.0, 0.0, 0.0), ShiftLabel::None);
        assert_eq!(th.label(0.2, 0.0, 0.0), ShiftLabel::Covariate);
        assert_eq!(th.label(0.2, 0.5, 0.0), ShiftLabel::Covariate);
        assert_eq!(th.label(0.0, 0.5, 0.05), ShiftLabel::Target);
        assert_eq!(th.label(0.0, 0.5, 0.5), ShiftLabel::Concept);
        assert_eq!(th.label(0.5, 0.5, 0.5), ShiftLabel::Mixed);
        assert_eq!(th.label(0.1, 0.1, 0.1), ShiftLabel::None);
    }

    #[test]
    fn shifted_streams_are_labelled() {
        let (_, p) = static_dev();
        let shift = |iv: Intervention| {
            let cfg = ToyConfig::static_reference().with_knobs(PsdKnobs {
                interventions: vec![iv],
                ..PsdKnobs::default()
            });
            generate_trace(&cfg, 2_000, 9).unwrap()
        };
        let covariate = shift(Intervention {
            input_offset: Some(3.0),
            ..Intervention::at(0)
        });
        let run = monitor_stream(covariate.records(), &p, 500, ShiftThresholds::default()).unwrap();
        assert!(run.reports.iter().all(|r| r.label == ShiftLabel::Covariate), "{:?}", run.reports);

        let concept = shift(Intervention {
            gain: Some(2.0),
            ..Intervention::at(0)
        });
        let run = monitor_stream(concept.records(), &p, 500, ShiftThresholds::default()).unwrap();
        assert!(run.reports.iter().all(|r| r.label == ShiftLabel::Concept), "{:?}", run.reports);
    }

    #[test]
    fn partial_window_only_warns() {
        let (dev, p) = static_dev();
        let run = monitor_stream(&dev.records()[..100], &p, 500, ShiftThresholds::default()).unwrap();
        assert!(run.reports.is_empty());
        assert_eq!(run.warnings.len(), 1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (_, p) = static_dev();
        let mut m = Monitor::new(&p, 10, ShiftThresholds::default()).unwrap();
        assert!(m.push(TraceRecord::new(0, vec![0.0, 1.0], vec![0.0])).is_err());
    }

    fn correlated_dev() -> ReferenceProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = Normal::new(0.0, 1.0).unwrap();
        let recs = (0..10_000)
            .map(|i| {
                let a: f64 = n.sample(&mut rng);
                let b = 0.95 * a + 0.3 * n.sample(&mut rng);
                TraceRecord::new(i, vec![a, b], vec![a + b])
            })
            .collect();
        let dev = Trace::from_records(recs, "corr").unwrap();
        let b = BinningSpec::fit_uniform(dev.records(), 8, 4).unwrap().spec;
        build_reference(&dev, &b, "corr").unwrap()
    }

    #[test]
    fn ood_tags() {
        let p = correlated_dev();
        assert!(classify_ood_record(&TraceRecord::new(0, vec![0.0, 0.0], vec![0.0]), &p).is_empty());
        let nan = classify_ood_record(&TraceRecord::new(0, vec![f64::NAN, 0.0], vec![0.0]), &p);
        assert_eq!(nan.into_iter().collect::<Vec<_>>(), [OodTag::DataCharacteristics]);
        // Inside the box, but far off the correlation ridge.
        let off = TraceRecord::new(0, vec![3.0, -3.0], vec![0.0]);
        let tags: Vec<_> = classify_ood_record(&off, &p).into_iter().collect();
        assert_eq!(tags, [OodTag::Outlier]);
        let far = TraceRecord::new(0, vec![100.0, 100.0], vec![0.0]);
        let tags: Vec<_> = classify_ood_record(&far, &p).into_iter().collect();
        assert_eq!(tags, [OodTag::UnknownClass]);
        let ranged = p.clone().with_declared_ranges(vec![(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        let tags: Vec<_> = classify_ood_record(&TraceRecord::new(0, vec![1.5, 1.5], vec![0.0]), &ranged).into_iter().collect();
        assert_eq!(tags, [OodTag::DataCharacteristics]);
    }

    #[test]
    fn covariate_stream_with_uniform_input_marks_tail_records() {
        let (_, p) = static_dev();
        let cfg = ToyConfig::static_reference().with_input(InputProcess::Uniform { low: 5.0, high: 6.0 });
        let far = generate_trace(&cfg, 500, 3).unwrap();
        let run = monitor_stream(far.records(), &p, 500, ShiftThresholds::default()).unwrap();
        assert_eq!(run.reports[0].flagged.len(), 500);
        assert_eq!(run.reports[0].label, ShiftLabel::Covariate);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lowering_the_floor_never_adds_flags(xs in proptest::collection::vec((-4.0..4.0f64, -4.0..4.0f64), 1..50), f1 in 0.0..0.1f64, f2 in 0.0..0.1f64) {
            let p = correlated_dev_cached();
            let (lo, hi) = (f1.min(f2), f1.max(f2));
            for (a, b) in xs {
                let r = TraceRecord::new(0, vec![a, b], vec![0.0]);
                let low = classify_ood_with_floor(&r, p, lo);
                let high = classify_ood_with_floor(&r, p, hi);
                prop_assert!(low.is_subset(&high));
            }
        }
    }

    fn correlated_dev_cached() -> &'static ReferenceProfile {
        use std::sync::OnceLock;
        static P: OnceLock<ReferenceProfile> = OnceLock::new();
        P.get_or_init(correlated_dev)
    }
}
