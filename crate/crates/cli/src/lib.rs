//! Command-line plumbing for the lexirank toolkit: config parsing, run
//! dispatch, and CSV/metadata serialization.
//!
//! Exit codes: 0 success, 2 validation error, 3 I/O error, 4 config parse
//! error, 5 solver divergence.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Cli};
pub use config::{parse_config, parse_config_str, serialize_config, RunConfig, SCHEMA_VERSION};
pub use error::CliError;
