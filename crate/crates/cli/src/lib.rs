//! Library side of the heatbloch command-line tool: configuration,
//! pipelines, and report documents. The binary in `main.rs` is a thin
//! dispatcher over these.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;

pub use config::{Overrides, RunConfig, Tolerances};
pub use error::{CliError, CliResult};
pub use report::OutputFormat;
