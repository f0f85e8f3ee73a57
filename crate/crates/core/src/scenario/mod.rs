//! Scenario configuration, subcommand runners and output emitters.

pub mod config;
pub mod manifest;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, ScenarioConfig, DEFAULT_CONFIG_TOML};
pub use manifest::{OutputChecksum, RunManifest};
pub use output::{Cell, OutputFormat, Table};
pub use run::{run_all, run_subcommand, RunOutcome, Subcommand};
