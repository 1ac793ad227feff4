//! Checkers for circumstance robustness, circumstance sensitivity and
//! dynamics stability.
//!
//! Every checker returns a [`Verdict`] whose evidence lists each compared
//! pair or window with its statistic and bounds. For a determinate verdict,
//! `pass` holds exactly when no entry is violated. Evidence order is
//! canonical (factor, then pair or window index), so results do not depend
//! on evaluation order.

mod grouping;
mod robustness;
mod sensitivity;
mod stability;

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use grouping::{group_by_factor, FactorGroup, FactorGrouping, DEFAULT_GROUPS};
pub use robustness::{check_robustness, FactorBounds, RobustnessSpec};
pub use sensitivity::{check_sensitivity, SensitivityFactor, SensitivitySpec};
pub use stability::{check_stability, StabilityParams, MIN_WINDOW};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryStatus {
    Checked,
    /// Pair with `delta <= tau`; not subject to the sensitivity band.
    SubThreshold,
    /// Window inside an event grace region.
    Grace,
    /// Operands share too few input cells to be compared.
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub id: String,
    #[serde(with = "crate::serde_float")]
    pub statistic: f64,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serde_float::option")]
    pub lower: Option<f64>,
    #[serde(with = "crate::serde_float")]
    pub upper: f64,
    pub violated: bool,
    pub status: EntryStatus,
    /// Time span (first and last tick) the entry refers to, for window entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(i64, i64)>,
}

impl EvidenceEntry {
    fn checked(id: String, statistic: f64, lower: Option<f64>, upper: f64) -> Self {
        let above = lower.is_some_and(|l| !(statistic > l));
        let below = match lower {
            // Band checks are strict on both sides.
            Some(_) => !(statistic < upper),
            None => !(statistic <= upper),
        };
        EvidenceEntry {
            id,
            statistic,
            lower,
            upper,
            violated: above || below,
            status: EntryStatus::Checked,
            span: None,
        }
    }

    fn skipped(id: String, statistic: f64, lower: Option<f64>, upper: f64, status: EntryStatus) -> Self {
        EvidenceEntry {
            id,
            statistic,
            lower,
            upper,
            violated: false,
            status,
            span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub property: String,
    pub pass: bool,
    /// No entry was checkable; `pass` is false and no entry is violated.
    pub indeterminate: bool,
    pub evidence: Vec<EvidenceEntry>,
    pub summary: String,
    /// Records excluded from grouping (out of bounds or unannotated).
    pub excluded_records: usize,
    /// Per-window statistic series, for plotting.
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "crate::serde_float::vec")]
    pub series: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Verdict {
    fn from_evidence(property: &str, evidence: Vec<EvidenceEntry>) -> Self {
        let violations = evidence.iter().filter(|e| e.violated).count();
        let checked = evidence.iter().filter(|e| e.status == EntryStatus::Checked).count();
        let incomparable = evidence.iter().any(|e| e.status == EntryStatus::Incomparable);
        let indeterminate = violations == 0 && (checked == 0 || incomparable);
        let pass = violations == 0 && !indeterminate;
        let summary = if indeterminate {
            alloc::format!("{property}: INDETERMINATE ({checked} checked entries, {} total)", evidence.len())
        } else if pass {
            alloc::format!("{property}: PASS ({checked} checked entries)")
        } else {
            let first: Vec<&str> = evidence.iter().filter(|e| e.violated).take(3).map(|e| e.id.as_str()).collect();
            alloc::format!(
                "{property}: FAIL ({violations} of {checked} checked entries violated; first: {})",
                first.join(", ")
            )
        };
        Verdict {
            property: String::from(property),
            pass,
            indeterminate,
            evidence,
            summary,
            excluded_records: 0,
            series: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn violations(&self) -> impl Iterator<Item = &EvidenceEntry> {
        self.evidence.iter().filter(|e| e.violated)
    }

    /// `pass` agrees with the evidence: true iff nothing is violated
    /// (indeterminate verdicts never pass and never carry violations).
    pub fn is_consistent(&self) -> bool {
        let clean = !self.evidence.iter().any(|e| e.violated);
        if self.indeterminate {
            !self.pass && clean
        } else {
            self.pass == clean
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refsys::{generate_trace, ContextProcess, ContextSignal, GatedGain, PsdKnobs, ToyConfig, ToyModel};
    use crate::stats::BinningSpec;
    use crate::trace::{Trace, TraceRecord, CIRCUMSTANCE_CHANGE};
    use alloc::vec;
    use proptest::prelude::*;

    fn noise_factor_trace(gated: Option<GatedGain>, seed: u64) -> Trace {
        let cfg = ToyConfig::new(ToyModel::Static {
            weights: vec![1.0],
            sigma: 0.5,
            noise_gain: 0.1,
        })
        .with_knobs(PsdKnobs {
            context: Some(ContextSignal {
                name: "noise".into(),
                process: ContextProcess::Uniform { low: 0.0, high: 1.0 },
                gated_gain: gated,
            }),
            ..PsdKnobs::default()
        });
        generate_trace(&cfg, 20_000, seed).unwrap()
    }

    fn robustness(kappa: f64) -> RobustnessSpec {
        RobustnessSpec::new(
            vec![FactorBounds {
                name: "noise".into(),
                low: 0.0,
                high: 1.0,
            }],
            kappa,
        )
    }

    fn fit(t: &Trace) -> BinningSpec {
        BinningSpec::fit_uniform(t.records(), 6, 6).unwrap().spec
    }

    #[test]
    fn robust_static_model_passes() {
        let t = noise_factor_trace(None, 1);
        let v = check_robustness(&t, &robustness(0.05), &fit(&t)).unwrap();
        assert!(v.pass, "{}", v.summary);
        assert_eq!(v.evidence.len(), 6);
        assert!(v.is_consistent());
    }

    #[test]
    fn gated_relationship_change_fails_on_top_group() {
        let t = noise_factor_trace(Some(GatedGain { threshold: 0.75, gain: 2.0 }), 1);
        let v = check_robustness(&t, &robustness(0.05), &fit(&t)).unwrap();
        assert!(!v.pass);
        let offending: Vec<_> = v.violations().collect();
        assert_eq!(offending.len(), 3, "{:?}", v.evidence);
        // The top quantile group holds every ctx > 0.75 record.
        let top = v.evidence.iter().filter(|e| e.violated).map(|e| e.id.split(" | ").nth(1).unwrap()).collect::<Vec<_>>();
        assert!(top.windows(2).all(|w| w[0] == w[1]));
        assert!(offending.iter().all(|e| e.statistic > 0.2));
    }

    #[test]
    fn identical_groups_give_exact_zero() {
        let mut recs = Vec::new();
        for i in 0..400 {
            let x = (i % 7) as f64;
            let y = ((i * 3) % 5) as f64;
            recs.push(TraceRecord::new(2 * i, vec![x], vec![y]).with_circ("f", 0.0));
            recs.push(TraceRecord::new(2 * i + 1, vec![x], vec![y]).with_circ("f", 1.0));
        }
        let t = Trace::from_records(recs, "dup").unwrap();
        let spec = RobustnessSpec::new(
            vec![FactorBounds {
                name: "f".into(),
                low: -1.0,
                high: 2.0,
            }],
            0.05,
        );
        let v = check_robustness(&t, &spec, &fit(&t)).unwrap();
        assert!(v.pass);
        assert_eq!(v.evidence.len(), 1);
        assert_eq!(v.evidence[0].statistic, 0.0);

        // Same groups labelled 2 tau apart cannot meet a positive lower band.
        let sens = SensitivitySpec::new(vec![SensitivityFactor {
            name: "f".into(),
            tau: 0.5,
            alpha: 0.1,
            epsilon: 0.05,
        }]);
        let v = check_sensitivity(&t, &sens, &fit(&t)).unwrap();
        assert!(!v.pass && !v.indeterminate);
        assert_eq!(v.violations().count(), 2);
    }

    #[test]
    fn robustness_errors() {
        let t = noise_factor_trace(None, 2);
        let mut spec = robustness(0.05);
        spec.factors[0].name = "missing".into();
        assert!(matches!(check_robustness(&t, &spec, &fit(&t)), Err(crate::Error::FactorAbsent(_))));
        let spec = RobustnessSpec::new(
            vec![FactorBounds {
                name: "noise".into(),
                low: 5.0,
                high: 6.0,
            }],
            0.05,
        );
        assert!(matches!(check_robustness(&t, &spec, &fit(&t)), Err(crate::Error::InsufficientCoverage(_))));
        assert!(check_robustness(&t, &robustness(0.0), &fit(&t)).is_err());
    }

    #[test]
    fn out_of_bounds_records_are_tallied() {
        let t = noise_factor_trace(None, 3);
        let mut spec = robustness(0.05);
        spec.factors[0].high = 0.5;
        let v = check_robustness(&t, &spec, &fit(&t)).unwrap();
        let expected = t.records().iter().filter(|r| r.circ["noise"] >= 0.5).count();
        assert_eq!(v.excluded_records, expected);
    }

    #[test]
    fn sensitivity_without_qualifying_pairs_is_indeterminate() {
        let t = noise_factor_trace(None, 4);
        let sens = SensitivitySpec::new(vec![SensitivityFactor {
            name: "noise".into(),
            tau: 5.0,
            alpha: 0.1,
            epsilon: 0.05,
        }]);
        let v = check_sensitivity(&t, &sens, &fit(&t)).unwrap();
        assert!(v.indeterminate && !v.pass);
        assert!(v.evidence.iter().all(|e| e.status == EntryStatus::SubThreshold));
    }

    #[test]
    fn sensitivity_spec_validation() {
        let bad = |tau, alpha, epsilon| {
            SensitivitySpec::new(vec![SensitivityFactor {
                name: "f".into(),
                tau,
                alpha,
                epsilon,
            }])
            .validate()
            .is_err()
        };
        assert!(bad(0.0, 1.0, 0.1));
        assert!(bad(1.0, 0.0, 0.0));
        assert!(bad(1.0, 1.0, 1.0));
        assert!(!bad(1.0, 1.0, 0.0));
    }

    fn drifting(seed: u64) -> Trace {
        let cfg = ToyConfig::static_reference().with_knobs(PsdKnobs {
            latent_drift: Some(0.05),
            ..PsdKnobs::default()
        });
        generate_trace(&cfg, 6_000, seed).unwrap()
    }

    #[test]
    fn event_exclusion_removes_exactly_that_window() {
        let t = drifting(7);
        let b = fit(&t);
        let params = StabilityParams {
            window: 500,
            stride: 500,
            eta: 0.02,
            grace: 0,
            ..Default::default()
        };
        let v = check_stability(&t, &params, &b).unwrap();
        let violating: Vec<_> = v.violations().map(|e| e.id.clone()).collect();
        assert!(!violating.is_empty());
        let target = &violating[0];
        let k: usize = target.trim_start_matches("window_").parse().unwrap();
        let mut recs = t.records().to_vec();
        recs[k * 500 + 10].events.insert(CIRCUMSTANCE_CHANGE.into());
        let marked = Trace::from_records(recs, "marked").unwrap();
        let v2 = check_stability(&marked, &params, &b).unwrap();
        let after: Vec<_> = v2.violations().map(|e| e.id.clone()).collect();
        let expected: Vec<_> = violating.iter().filter(|id| *id != target).cloned().collect();
        assert_eq!(after, expected);
        assert_eq!(v.series, v2.series);
    }

    fn small_trace(values: &[(f64, f64, u8)]) -> Trace {
        let recs = values
            .iter()
            .enumerate()
            .map(|(i, (x, y, f))| TraceRecord::new(i as i64, vec![*x], vec![*y]).with_circ("f", f64::from(*f)))
            .collect();
        Trace::from_records(recs, "p").unwrap()
    }

    fn grouped_trace() -> impl Strategy<Value = Trace> {
        proptest::collection::vec((0.0..4.0f64, 0.0..4.0f64, 0u8..3), 200..400).prop_map(|v| small_trace(&v))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn robustness_verdicts_are_consistent_and_monotone(t in grouped_trace(), k1 in 0.001..0.5f64, dk in 0.0..0.5f64) {
            let b = BinningSpec::fit_uniform(t.records(), 2, 3).unwrap().spec;
            let spec = |k| RobustnessSpec::new(vec![FactorBounds { name: "f".into(), low: -1.0, high: 3.0 }], k);
            let lo = check_robustness(&t, &spec(k1), &b).unwrap();
            let hi = check_robustness(&t, &spec(k1 + dk), &b).unwrap();
            prop_assert!(lo.is_consistent() && hi.is_consistent());
            if lo.pass {
                prop_assert!(hi.pass);
            }
        }

        #[test]
        fn widening_epsilon_never_breaks_a_pass(t in grouped_trace(), alpha in 0.001..0.2f64, e1 in 0.0..0.5f64, e2 in 0.0..0.5f64) {
            let b = BinningSpec::fit_uniform(t.records(), 2, 3).unwrap().spec;
            let (narrow, wide) = (e1.min(e2) * alpha, e1.max(e2) * alpha);
            let spec = |eps| SensitivitySpec::new(vec![SensitivityFactor { name: "f".into(), tau: 0.5, alpha, epsilon: eps }]);
            let a = check_sensitivity(&t, &spec(narrow), &b).unwrap();
            let c = check_sensitivity(&t, &spec(wide), &b).unwrap();
            prop_assert!(a.is_consistent() && c.is_consistent());
            if a.pass {
                prop_assert!(c.pass);
            }
        }
    }
}
