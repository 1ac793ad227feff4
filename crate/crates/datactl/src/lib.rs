//! File formats, reports, plots and the command line for `datactl`.
//!
//! The analysis itself lives in [`datactl_core`]; this crate reads and
//! writes the JSON-lines trace format, renders reports and SVG charts, and
//! maps outcomes onto exit codes.

pub mod cli;
pub mod io;
pub mod plot;
pub mod report;

pub use cli::{run, run_with};
