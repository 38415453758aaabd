//! Experiment runner for the UAV-RIS simulator: configuration files,
//! seeded training and evaluation, run directories, sweeps and plot data.
//!
//! Every run lives in its own directory holding the resolved `config.toml`,
//! row files (`episodes.csv`, `slots.csv`) whose first line records the
//! config hash and seed, a `summary.json`, and for learners the best and
//! final checkpoints. A `PARTIAL` marker stays behind if a run aborts.

pub mod config;
pub mod error;
pub mod matrix;
pub mod plot;
pub mod run;
pub mod store;

pub use config::{ExperimentConfig, Impairments, OnOff};
pub use error::{HarnessError, Result};
pub use matrix::{run_matrix, Axes, ComparisonTable};
pub use plot::emit_plot_data;
pub use run::{run_eval, run_train, RunRecord, Summary};
