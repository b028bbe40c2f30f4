//! Scenario files, bundled scenarios and the subcommands of the `shoalwave`
//! binary. Every command writes its report to a caller-supplied sink and
//! returns the process exit status.

pub mod bundled;
pub mod commands;
pub mod config;

pub use commands::{ExitStatus, RunOverrides};
pub use config::{BathymetrySpec, GridSpec, InitialCondition, OutputSpec, Scenario, ScenarioConfig};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "SHOALWAVE_OUTPUT_ROOT";
