//! Experiment orchestration behind the command-line tool.
//!
//! Every command takes an [`ExperimentConfig`], computes everything first
//! and then writes its files under `output_dir`:
//!
//! | command    | files                                                          |
//! |------------|----------------------------------------------------------------|
//! | `evaluate` | `evaluate/report.json`, `evaluate/trace.csv`                   |
//! | `optimize` | `optimize/best_profile.json`, `optimize/report.json`, `optimize/training_trace.csv` |
//! | `sweep`    | `sweep/sweep.csv`, `sweep/report.json`                         |
//! | `audit`    | `audit/report.json`, `audit/profile.json`                      |
//! | `export`   | `export/profile.json`, `export/profile_trace.csv`              |
//!
//! CSV files open with a `#` line naming their columns. Output depends only
//! on the config and seed.

mod commands;
mod config;
mod output;

pub use commands::{
    cmd_audit, cmd_evaluate, cmd_export, cmd_optimize, cmd_sweep, evaluate_profile, export_dir, profile_trace,
    AuditEntry, AuditReport, BoundVerdicts, CandidateSummary, EvaluateReport, OptimizeReport, ProfileEvaluation,
    SweepReport, SweepRow, BEST_PROFILE_FILE, BOUNDARY_TOLERANCE,
};
pub use config::{AuditConfig, ExperimentConfig, Overrides, ProfileSource, SweepConfig, SweepMode};
pub use output::{CsvTable, OutputSet};
