//! Trace records, validated traces and sliding windows.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Event tag marking the instant a circumstance changed.
pub const CIRCUMSTANCE_CHANGE: &str = "circumstance_change";

/// One timestamped observation of a monitored system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Integer tick; wall-clock time, if needed, travels as a circumstance.
    pub t: i64,
    #[serde(with = "crate::serde_float::vec")]
    pub x: Vec<f64>,
    #[serde(with = "crate::serde_float::vec")]
    pub y: Vec<f64>,
    /// Circumstance name to value. Missing keys mean "unspecified".
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty", with = "crate::serde_float::map")]
    pub circ: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub events: BTreeSet<String>,
}

impl TraceRecord {
    pub fn new(t: i64, x: Vec<f64>, y: Vec<f64>) -> Self {
        TraceRecord {
            t,
            x,
            y,
            circ: BTreeMap::new(),
            events: BTreeSet::new(),
        }
    }

    pub fn with_circ(mut self, name: impl Into<String>, value: f64) -> Self {
        self.circ.insert(name.into(), value);
        self
    }

    pub fn with_event(mut self, tag: impl Into<String>) -> Self {
        self.events.insert(tag.into());
        self
    }

    pub fn has_event(&self, tag: &str) -> bool {
        self.events.contains(tag)
    }

    /// True when every input and output feature is finite.
    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub x_dim: usize,
    pub y_dim: usize,
    /// Every circumstance name seen in the trace.
    pub circumstances: BTreeSet<String>,
    pub source: String,
}

/// A non-empty, dimensionally consistent record sequence with strictly
/// increasing `t`. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    records: Vec<TraceRecord>,
    meta: TraceMeta,
}

impl Trace {
    /// Validates `records` in the given order.
    pub fn from_records(records: Vec<TraceRecord>, source: impl Into<String>) -> Result<Self> {
        let first = records.first().ok_or(Error::EmptyTrace)?;
        let (x_dim, y_dim) = (first.x.len(), first.y.len());
        let mut circumstances = BTreeSet::new();
        let mut prev: Option<i64> = None;
        for (index, r) in records.iter().enumerate() {
            if r.x.len() != x_dim {
                return Err(Error::DimensionMismatch {
                    index,
                    what: "x",
                    expected: x_dim,
                    found: r.x.len(),
                });
            }
            if r.y.len() != y_dim {
                return Err(Error::DimensionMismatch {
                    index,
                    what: "y",
                    expected: y_dim,
                    found: r.y.len(),
                });
            }
            if let Some(p) = prev {
                if r.t <= p {
                    return Err(Error::NonMonotoneTime { index, prev: p, t: r.t });
                }
            }
            prev = Some(r.t);
            circumstances.extend(r.circ.keys().cloned());
        }
        Ok(Trace {
            records,
            meta: TraceMeta {
                x_dim,
                y_dim,
                circumstances,
                source: source.into(),
            },
        })
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TraceRecord> {
        self.records
    }

    pub fn meta(&self) -> &TraceMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn x_dim(&self) -> usize {
        self.meta.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.meta.y_dim
    }

    /// Consecutive slices `[k*stride, k*stride + width)`; a trailing partial
    /// slice is dropped.
    pub fn windows(&self, width: usize, stride: usize) -> Result<Vec<Window<'_>>> {
        windows(&self.records, width, stride)
    }
}

/// A borrowed slice of a trace produced by [`Trace::windows`].
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub index: usize,
    pub offset: usize,
    pub records: &'a [TraceRecord],
}

impl Window<'_> {
    pub fn first_t(&self) -> i64 {
        self.records[0].t
    }

    pub fn last_t(&self) -> i64 {
        self.records[self.records.len() - 1].t
    }
}

pub fn windows(records: &[TraceRecord], width: usize, stride: usize) -> Result<Vec<Window<'_>>> {
    if width == 0 {
        return Err(Error::param("width", "must be at least 1"));
    }
    if stride == 0 {
        return Err(Error::param("stride", "must be at least 1"));
    }
    if width > records.len() {
        return Err(Error::WindowTooWide {
            width,
            len: records.len(),
        });
    }
    let count = (records.len() - width) / stride + 1;
    Ok((0..count)
        .map(|index| {
            let offset = index * stride;
            Window {
                index,
                offset,
                records: &records[offset..offset + width],
            }
        })
        .collect())
}

/// Identity of the monitored model, carried into reports as annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub environment: String,
    /// Opaque parameter tag (checkpoint id, hash, ...).
    pub parameters: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,
}

impl ModelDescriptor {
    pub fn new(
        name: impl Into<String>,
        environment: impl Into<String>,
        parameters: impl Into<String>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::param("name", "model name must not be empty"));
        }
        Ok(ModelDescriptor {
            name,
            environment: environment.into(),
            parameters: parameters.into(),
            loss: None,
        })
    }

    pub fn with_loss(mut self, loss: impl Into<String>) -> Self {
        self.loss = Some(loss.into());
        self
    }
}
