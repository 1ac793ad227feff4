//! JSON report envelope and the exit-code contract.

use datactl_core::properties::Verdict;
use datactl_core::ModelDescriptor;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Pass,
    Fail,
    Indeterminate,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Pass => 0,
            Status::Fail => 1,
            Status::Indeterminate => 2,
            Status::Error => 3,
        }
    }

    pub fn of_verdict(v: &Verdict) -> Self {
        if v.indeterminate {
            Status::Indeterminate
        } else if v.pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// Top-level document written by single-result commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<T> {
    pub command: String,
    pub version: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelDescriptor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<T>,
    /// Why no result was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl<T> Report<T> {
    pub fn new(command: &str, status: Status, result: Option<T>) -> Self {
        Report {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status,
            model: None,
            result,
            message: None,
            warnings: Vec::new(),
        }
    }
}

/// One line per verdict for stderr.
pub fn verdict_summary(v: &Verdict) -> String {
    let mut s = v.summary.clone();
    for e in v.violations().take(10) {
        let bound = match e.lower {
            Some(l) => format!("({l:.4}, {:.4})", e.upper),
            None => format!("<= {:.4}", e.upper),
        };
        s.push_str(&format!("\n  violated {}: {:.4} not in {bound}", e.id, e.statistic));
        if let Some((a, b)) = e.span {
            s.push_str(&format!(" [t {a}..{b}]"));
        }
    }
    if v.excluded_records > 0 {
        s.push_str(&format!("\n  {} record(s) excluded from grouping", v.excluded_records));
    }
    for w in &v.warnings {
        s.push_str(&format!("\n  warning: {w}"));
    }
    s
}
