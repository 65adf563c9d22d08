//! Batch front end for the simulator: experiment files, parallel runs and
//! CSV output.

pub mod error;
pub mod experiment;
pub mod spec;

pub use error::{CliError, Result};
pub use experiment::{run_experiment, ExperimentOutput, RunKey, ROUND_COLUMNS, SUMMARY_COLUMNS};
pub use spec::{load_config, parse_spec, ExperimentSpec, Sweep};
