//! Library surface of the experiment runner, shared by the binary and the
//! integration tests.

pub mod config;
pub mod error;
pub mod run;
pub mod table;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use error::CliError;
pub use run::{manifest_path_for, run_experiment, Manifest, Mode, RunSummary};
pub use table::{to_db, OutputFormat};
