//! Configuration, orchestration and report emission for the `mmtail`
//! command-line tool.

pub mod config;
pub mod error;
pub mod run;

pub use config::{load_config, parse_config, ExperimentConfig, Format, Model, Task};
pub use error::{CliError, Issue};
pub use run::{run, write_outcome, Outcome, Table};
