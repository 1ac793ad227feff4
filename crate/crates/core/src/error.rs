use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the analysis core.
///
/// Record positions are zero-based indices into the record sequence handed
/// to the failing operation; file readers translate them to line numbers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty trace")]
    EmptyTrace,
    #[error("record {index}: {what} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("record {index}: time {t} does not strictly increase (previous {prev})")]
    NonMonotoneTime { index: usize, prev: i64, t: i64 },
    #[error("window width {width} exceeds trace length {len}")]
    WindowTooWide { width: usize, len: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("binning needs {cells} cells, cap is {cap}; use fewer bins")]
    CellCapExceeded { cells: u128, cap: u64 },
    #[error("binning mismatch between distributions")]
    BinningMismatch,
    #[error("probability vectors differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("probability vector is not normalized (sum {sum})")]
    NotNormalized { sum: f64 },
    #[error("insufficient overlap: no input cell has enough samples in both distributions")]
    InsufficientOverlap,
    #[error("trace too short: {len} records, need at least {needed}")]
    TraceTooShort { len: usize, needed: usize },
    #[error("circumstance factor `{0}` does not appear in the trace")]
    FactorAbsent(String),
    #[error("insufficient circumstance coverage for factor `{0}`")]
    InsufficientCoverage(String),
    #[error("fewer than 3 windows ({0}); stability is indeterminate")]
    TooFewWindows(usize),
    #[error("stiff configuration: step halving failed at t = {t}")]
    StiffConfiguration { t: f64 },
    #[error("no last-valid state in the runtime buffer")]
    NoLastValidState,
    #[error("invalid hazard template `{id}`: {reason}")]
    InvalidTemplate { id: String, reason: String },
}

impl Error {
    /// Conditions that make a check indeterminate rather than erroneous.
    pub fn is_indeterminate(&self) -> bool {
        matches!(self, Error::TooFewWindows(_))
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
