use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::grouping::{group_by_factor, DEFAULT_GROUPS};
use super::{EntryStatus, EvidenceEntry, Verdict};
use crate::error::{Error, Result};
use crate::stats::{pooled_symmetrized_kl, BinningSpec, ConditionalDistribution, DEFAULT_MIN_CELL_COUNT};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBounds {
    pub name: String,
    /// Open interval `(low, high)` the factor must lie in.
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSpec {
    pub factors: Vec<FactorBounds>,
    /// Largest tolerated symmetrized conditional KL between groups (nats).
    #[serde(alias = "kappa_rob")]
    pub kappa: f64,
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

impl RobustnessSpec {
    pub fn new(factors: Vec<FactorBounds>, kappa: f64) -> Self {
        RobustnessSpec {
            factors,
            kappa,
            groups: DEFAULT_GROUPS,
            n_min: DEFAULT_MIN_CELL_COUNT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factors.is_empty() {
            return Err(Error::param("factors", "at least one factor is required"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("kappa", "must be finite and > 0"));
        }
        for f in &self.factors {
            if !(f.low < f.high) {
                return Err(Error::param("bounds", format!("factor {}: low must be below high", f.name)));
            }
        }
        Ok(())
    }
}

/// PASS iff, for every factor, the output law given the input agrees across
/// all in-bounds groups of that factor to within `kappa`.
pub fn check_robustness(trace: &Trace, spec: &RobustnessSpec, binning: &BinningSpec) -> Result<Verdict> {
    spec.validate()?;
    let mut evidence = Vec::new();
    let mut excluded = 0;
    let mut warnings = Vec::new();
    for f in &spec.factors {
        let grouping = group_by_factor(trace.records(), &f.name, Some((f.low, f.high)), spec.groups)?;
        if grouping.groups.len() < 2 {
            return Err(Error::InsufficientCoverage(format!(
                "factor {} has {} in-bounds group(s); need 2",
                f.name,
                grouping.groups.len()
            )));
        }
        excluded += grouping.out_of_bounds + grouping.unannotated;
        let dists = grouping
            .groups
            .iter()
            .map(|g| ConditionalDistribution::estimate_iter(g.records.iter().copied(), binning))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..dists.len() {
            for j in i + 1..dists.len() {
                let id = format!("{} | {}", grouping.groups[i].label, grouping.groups[j].label);
                match pooled_symmetrized_kl(&dists[i], &dists[j], spec.n_min) {
                    Ok(kl) => {
                        if kl.excluded_mass > 0.5 {
                            warnings.push(format!("{id}: {:.0}% of input mass skipped", kl.excluded_mass * 100.0));
                        }
                        evidence.push(EvidenceEntry::checked(id, kl.value, None, spec.kappa));
                    }
                    Err(Error::InsufficientOverlap) => {
                        warnings.push(format!("{id}: groups share no well-populated input cell"));
                        evidence.push(EvidenceEntry::skipped(id, f64::NAN, None, spec.kappa, EntryStatus::Incomparable));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut v = Verdict::from_evidence("robustness", evidence);
    v.excluded_records = excluded;
    v.warnings = warnings;
    Ok(v)
}
