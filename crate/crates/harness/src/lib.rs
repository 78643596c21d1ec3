//! Configuration, experiment drivers, result records and gates behind the
//! `polarguard` command.

pub mod cache;
pub mod config;
pub mod experiment;
pub mod gates;
pub mod record;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{run_experiment, ExperimentError};
pub use gates::{evaluate, Gate};
pub use record::ResultRecord;
