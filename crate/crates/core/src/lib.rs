//! Statistical input-output analysis of black-box systems.
//!
//! Everything in this crate works on in-memory traces of `(t, x, y)`
//! observations and is `no_std` (it needs `alloc` and nothing else). File
//! formats, the command line and plotting live in the `datactl` crate.
//!
//! The building blocks, bottom-up:
//!
//! - [`trace`]: records, validated traces and sliding windows.
//! - [`stats`]: histogram estimates of `P(Y|X)`, `P(X)`, `P(Y)` with
//!   Jeffreys smoothing, and discrete / conditional KL divergences.
//! - [`sysclass`]: static / non-stationary / dynamic classification,
//!   passively from a trace or actively by probing a resettable system.
//! - [`properties`]: circumstance robustness, circumstance sensitivity and
//!   dynamics stability checkers producing [`properties::Verdict`]s.
//! - [`monitor`]: reference-vs-runtime windows, shift labelling and
//!   record-level OOD tags.
//! - [`imagination`]: misuse detection, hazard templates and risk ranking.
//! - [`retrospect`]: windowed prediction-vs-outcome trust scoring.
//! - [`refsys`]: Lotka-Volterra and toy models used as ground truth.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod imagination;
pub(crate) mod math;
pub mod monitor;
pub mod properties;
pub mod refsys;
pub mod retrospect;
pub mod serde_float;
pub mod stats;
pub mod sysclass;
pub mod trace;

pub use error::{Error, Result};
pub use trace::{ModelDescriptor, Trace, TraceMeta, TraceRecord, Window, CIRCUMSTANCE_CHANGE};
