//! IO, file formats, and orchestration around `satlab-core`.
//!
//! The library side of the `satlab` binary: strict JSON configs, versioned
//! distribution and checkpoint documents, deterministic CSV/JSON reports,
//! and atomic output installation.

// validation uses `!(x >= 0.0)` so NaN fails the checks too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod outputs;
pub mod schema;

pub use commands::{run_command, CommandKind};
pub use error::{CliError, CliResult};
