//! Simulation harness, TOML configuration and CSV output on top of
//! [`lpfdr_core`].

pub mod config;
pub mod output;
pub mod sim;

pub use config::{parse_config_file, parse_config_str, preset_config, ConfigError};
pub use output::{write_outputs, OutputError};
pub use sim::{run_simulation, MethodReport, SimConfig, SimReport};
