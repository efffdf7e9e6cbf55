//! Batch front end: flat `key = value` configs, subcommand dispatch and artifacts.

mod config;
mod run;

pub use config::{parse_config, parse_config_in, FieldSource, Radius, RunConfig, Subcommand};
pub use run::{default_out_dir, exit_code, run, write_outputs, Artifacts, RunOutcome, RunStatus};
