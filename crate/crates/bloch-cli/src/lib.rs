//! Harness internals, exposed for the integration tests: the experiment
//! configuration schema and the task runner behind the `bloch` binary.

pub mod config;
pub mod run;
