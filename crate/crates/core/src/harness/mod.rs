//! Configuration, synthetic datasets and scenario runners behind the
//! `kingflow` binary.

pub mod config;
pub mod datasets;
pub mod io;
pub mod scenarios;

pub use config::{DatasetSpec, InitSpec, ManifoldSpec, MethodSpec, RunConfig, Scenario, TargetSpec};
pub use scenarios::{run_scenario, MethodReport, ScenarioReport, Seeds};
