//! Command-line front end for the rank-aggregation library: impression-file
//! parsing, experiment configuration, the rerank/theory/simulate/sweep
//! commands, and CSV/JSON report emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod estimate;
pub mod formats;
pub mod report;

pub use error::{CliError, CliResult};
