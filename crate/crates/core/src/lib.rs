//! Capacity self-planning for multi-tenant small-cell networks.
//!
//! The crate models a pixel grid with per-tenant traffic, a small-cell
//! layout with channel and power assignments, and the radio quantities that
//! follow from it. On top of that sit tenant SLA translation, the bandwidth
//! conformance monitor, and the greedy re-planning algorithm. The
//! [`experiment`] module ties them together for the new-tenant use case.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod experiment;
pub mod monitor;
pub mod performance;
pub mod planner;
pub mod radio;
pub mod raster;
pub mod report;
pub mod scenario;
pub mod scenario_file;
pub mod sla;

pub use error::{Error, Result};
pub use exec::Execution;
pub use experiment::{run_experiment, ExperimentConfig, Method, Report};
pub use report::emit_report;
pub use scenario_file::{bundled_scenario, Scenario, ScenarioFile};
