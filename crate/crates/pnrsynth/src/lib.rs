//! File formats and the command-line pipeline around `pnrsynth-core`:
//! CSV and segment-message records, schema sidecars, plan and codec files,
//! binary checkpoints, run configuration and evaluation report output.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod plan_file;
pub mod report;
pub mod schema_file;
pub mod segments;

pub use error::{Error, ParseError, Result};
