use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grouping::{group_by_factor, DEFAULT_GROUPS};
use super::{EntryStatus, EvidenceEntry, Verdict};
use crate::error::{Error, Result};
use crate::stats::{pooled_conditional_kl, BinningSpec, ConditionalDistribution, DEFAULT_MIN_CELL_COUNT};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityFactor {
    pub name: String,
    /// Smallest factor change that must be reflected in the output law.
    pub tau: f64,
    /// Expected divergence per `tau` of factor change (nats).
    pub alpha: f64,
    /// Tolerance on `alpha`; must satisfy `0 <= epsilon < alpha`.
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySpec {
    pub factors: Vec<SensitivityFactor>,
    #[serde(default = "default_groups")]
    pub groups: usize,
    #[serde(default = "default_n_min")]
    pub n_min: u64,
}

fn default_groups() -> usize {
    DEFAULT_GROUPS
}

fn default_n_min() -> u64 {
    DEFAULT_MIN_CELL_COUNT
}

impl SensitivitySpec {
    pub fn new(factors: Vec<SensitivityFactor>) -> Self {
        SensitivitySpec {
            factors,
            groups: DEFAULT_GROUPS,
            n_min: DEFAULT_MIN_CELL_COUNT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::param("factors", "at least one factor is required"));
        }
        for f in &self.factors {
            if !(f.tau > 0.0 && f.tau.is_finite()) {
                return Err(Error::param("tau", format!("factor {}: must be > 0", f.name)));
            }
            if !(f.alpha > 0.0 && f.alpha.is_finite()) {
                return Err(Error::param("alpha", format!("factor {}: must be > 0", f.name)));
            }
            if !(f.epsilon >= 0.0 && f.epsilon < f.alpha) {
                return Err(Error::param("epsilon", format!("factor {}: need 0 <= epsilon < alpha", f.name)));
            }
        }
        Ok(())
    }
}

/// For every ordered pair of groups whose factor values differ by more than
/// `tau`, the directed conditional divergence must lie strictly inside
/// `((alpha - epsilon) delta / tau, (alpha + epsilon) delta / tau)`.
pub fn check_sensitivity(trace: &Trace, spec: &SensitivitySpec, binning: &BinningSpec) -> Result<Verdict> {
    spec.validate()?;
    let mut evidence = Vec::new();
    let mut excluded = 0;
    let mut warnings = Vec::new();
    for f in &spec.factors {
        let grouping = group_by_factor(trace.records(), &f.name, None, spec.groups)?;
        if grouping.groups.len() < 2 {
            return Err(Error::InsufficientCoverage(format!(
                "factor {} takes a single value; need 2",
                f.name
            )));
        }
        excluded += grouping.out_of_bounds + grouping.unannotated;
        let dists = grouping
            .groups
            .iter()
            .map(|g| ConditionalDistribution::estimate_iter(g.records.iter().copied(), binning))
            .collect::<Result<Vec<_>>>()?;
        let gs = &grouping.groups;
        for m in 0..gs.len() {
            for n in 0..gs.len() {
                if m == n {
                    continue;
                }
                let delta = (gs[m].value - gs[n].value).abs();
                let scale = delta / f.tau;
                let lower = (f.alpha - f.epsilon) * scale;
                let upper = (f.alpha + f.epsilon) * scale;
                let id = format!("{} -> {}", gs[m].label, gs[n].label);
                if delta <= f.tau {
                    evidence.push(EvidenceEntry::skipped(id, f64::NAN, Some(lower), upper, EntryStatus::SubThreshold));
                    continue;
                }
                match pooled_conditional_kl(&dists[m], &dists[n], spec.n_min) {
                    Ok(kl) => evidence.push(EvidenceEntry::checked(id, kl.value, Some(lower), upper)),
                    Err(Error::InsufficientOverlap) => {
                        warnings.push(format!("{id}: groups share no well-populated input cell"));
                        evidence.push(EvidenceEntry::skipped(id, f64::NAN, Some(lower), upper, EntryStatus::Incomparable));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut v = Verdict::from_evidence("sensitivity", evidence);
    v.excluded_records = excluded;
    v.warnings = warnings;
    Ok(v)
}
