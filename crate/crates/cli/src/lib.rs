//! Configuration and orchestration behind the `kss` binary.

pub mod config;
pub mod expr;
pub mod run;

pub use config::{preset, Experiment, RunConfig, PRESETS};
pub use run::{run, Options, Outcome};
