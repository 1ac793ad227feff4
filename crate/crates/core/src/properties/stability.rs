use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{EntryStatus, EvidenceEntry, Verdict};
use crate::error::{Error, Result};
use crate::stats::{pooled_conditional_kl, BinningSpec, ConditionalDistribution, DEFAULT_MIN_CELL_COUNT};
use crate::trace::{Trace, Window, CIRCUMSTANCE_CHANGE};

pub const MIN_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityParams {
    pub window: usize,
    pub stride: usize,
    /// Tolerated increase of the window-to-window divergence (nats).
    pub eta: f64,
    /// Windows after an event's window that are exempt from the check.
    pub grace: usize,
    pub n_min: u64,
}

impl Default for StabilityParams {
    fn default() -> Self {
        StabilityParams {
            window: 500,
            stride: 250,
            eta: 0.02,
            grace: 2,
            n_min: DEFAULT_MIN_CELL_COUNT,
        }
    }
}

impl StabilityParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < MIN_WINDOW {
            return Err(Error::param("window", format!("must be at least {MIN_WINDOW}")));
        }
        if self.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param("eta", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Windows exempt from the check: each window containing an event record,
/// plus the `grace` windows following the last window that starts at or
/// before the event.
fn grace_windows(windows: &[Window<'_>], records: &[crate::trace::TraceRecord], grace: usize) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for (e, r) in records.iter().enumerate() {
        if !r.has_event(CIRCUMSTANCE_CHANGE) {
            continue;
        }
        let mut last_start: Option<usize> = None;
        for w in windows {
            if w.offset <= e {
                last_start = Some(w.index);
                if e < w.offset + w.records.len() {
                    out.insert(w.index);
                }
            }
        }
        let after = last_start.map_or(0, |k| k + 1);
        out.extend(after..(after + grace).min(windows.len()));
    }
    out
}

/// Window-to-window divergence `D[k] = D(P_k || P_{k-1})` must not grow by
/// more than `eta` between consecutive windows, outside grace regions.
/// The increment `D[k+1] - D[k]` is attributed to window `k + 1`.
pub fn check_stability(trace: &Trace, params: &StabilityParams, binning: &BinningSpec) -> Result<Verdict> {
    params.validate()?;
    let windows = match trace.windows(params.window, params.stride) {
        Ok(w) => w,
        Err(Error::WindowTooWide { .. }) => return Err(Error::TooFewWindows(0)),
        Err(e) => return Err(e),
    };
    if windows.len() < 3 {
        return Err(Error::TooFewWindows(windows.len()));
    }
    let dists = windows
        .iter()
        .map(|w| ConditionalDistribution::estimate(w.records, binning))
        .collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    // series[0] is undefined (no predecessor) and kept as 0 for plotting.
    let mut series = Vec::with_capacity(windows.len());
    series.push(0.0);
    for k in 1..dists.len() {
        match pooled_conditional_kl(&dists[k], &dists[k - 1], params.n_min) {
            Ok(kl) => series.push(kl.value),
            Err(Error::InsufficientOverlap) => {
                warnings.push(format!("window {k}: no well-populated input cell shared with window {}", k - 1));
                series.push(f64::NAN);
            }
            Err(e) => return Err(e),
        }
    }
    let grace = grace_windows(&windows, trace.records(), params.grace);
    let mut evidence = Vec::with_capacity(windows.len().saturating_sub(2));
    for k in 2..windows.len() {
        let inc = series[k] - series[k - 1];
        let id = format!("window_{k}");
        let mut entry = if grace.contains(&k) {
            EvidenceEntry::skipped(id, inc, None, params.eta, EntryStatus::Grace)
        } else if inc.is_nan() {
            EvidenceEntry::skipped(id, inc, None, params.eta, EntryStatus::Incomparable)
        } else {
            EvidenceEntry::checked(id, inc, None, params.eta)
        };
        entry.span = Some((windows[k].first_t(), windows[k].last_t()));
        evidence.push(entry);
    }
    let mut v = Verdict::from_evidence("stability", evidence);
    v.series = series;
    v.warnings = warnings;
    Ok(v)
}
