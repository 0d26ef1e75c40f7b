//! Scenario configuration, slot simulation, metrics and result files.

pub mod config;
pub mod metrics;
pub mod output;
pub mod sim;
pub mod tables;

pub use config::{CerMap, LaMode, PathSpec, Scenario, SimConfig};
pub use metrics::{compare_runs, compute_metrics, Basis, Confusion, MetricsReport, SchemeMetrics, UeMetrics};
pub use output::{write_abstraction, write_compare, write_la_trace, write_la_trace_file, write_report, Manifest};
pub use sim::{Engine, Mode, PathSlot, SimRun, SlotResult, UeSlot};
pub use tables::{build_tables, calibrate_betas, code_for};
