//! Partitioning a trace by the value of one circumstance.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::trace::TraceRecord;

/// Quantile groups used when a factor takes more distinct values than this.
pub const DEFAULT_GROUPS: usize = 4;

#[derive(Debug, Clone)]
pub struct FactorGroup<'a> {
    pub label: String,
    /// Representative factor value: the distinct value, or the group median.
    pub value: f64,
    pub low: f64,
    pub high: f64,
    pub records: Vec<&'a TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct FactorGrouping<'a> {
    pub factor: String,
    pub groups: Vec<FactorGroup<'a>>,
    /// Records carrying the factor but outside the bounds (or non-finite).
    pub out_of_bounds: usize,
    /// Records without the factor.
    pub unannotated: usize,
}

/// Groups records by `factor`. Values must lie strictly inside `bounds`
/// when given. At most `max_groups` distinct values give one group each;
/// otherwise records are split into `max_groups` quantile groups, with equal
/// values always landing in the same group.
pub fn group_by_factor<'a>(
    records: &'a [TraceRecord],
    factor: &str,
    bounds: Option<(f64, f64)>,
    max_groups: usize,
) -> Result<FactorGrouping<'a>> {
    if max_groups < 2 {
        return Err(Error::param("groups", "need at least 2 groups"));
    }
    let mut kept: Vec<(f64, &TraceRecord)> = Vec::new();
    let (mut out_of_bounds, mut unannotated) = (0, 0);
    for r in records {
        match r.circ.get(factor) {
            None => unannotated += 1,
            Some(&v) => {
                let inside = v.is_finite() && bounds.is_none_or(|(lo, hi)| lo < v && v < hi);
                if inside {
                    kept.push((v, r));
                } else {
                    out_of_bounds += 1;
                }
            }
        }
    }
    if unannotated == records.len() {
        return Err(Error::FactorAbsent(String::from(factor)));
    }
    let mut values: Vec<f64> = kept.iter().map(|(v, _)| *v).collect();
    values.sort_by(f64::total_cmp);
    let mut distinct = values.clone();
    distinct.dedup();

    let thresholds: Vec<f64> = if distinct.len() <= max_groups {
        distinct.iter().skip(1).copied().collect()
    } else {
        let mut t: Vec<f64> = (1..max_groups).map(|k| values[k * values.len() / max_groups]).collect();
        t.dedup();
        t
    };
    let n_groups = thresholds.len() + 1;
    let mut members: Vec<Vec<(f64, &TraceRecord)>> = (0..n_groups).map(|_| Vec::new()).collect();
    for (v, r) in kept {
        let g = thresholds.partition_point(|t| *t <= v);
        members[g].push((v, r));
    }

    let single_valued = distinct.len() <= max_groups;
    let groups = members
        .into_iter()
        .filter(|m| !m.is_empty())
        .map(|mut m| {
            m.sort_by(|a, b| a.0.total_cmp(&b.0));
            let low = m[0].0;
            let high = m[m.len() - 1].0;
            let value = if single_valued { low } else { m[(m.len() - 1) / 2].0 };
            let label = if single_valued {
                format!("{factor}={low}")
            } else {
                format!("{factor}in[{low},{high}]")
            };
            FactorGroup {
                label,
                value,
                low,
                high,
                records: m.into_iter().map(|(_, r)| r).collect(),
            }
        })
        .collect();
    Ok(FactorGrouping {
        factor: String::from(factor),
        groups,
        out_of_bounds,
        unannotated,
    })
}
