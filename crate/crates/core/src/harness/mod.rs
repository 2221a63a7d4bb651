//! Experiment runner: wires stream, model, scoring, memory and metrics into
//! the online training loop and runs seeded grids.

mod config;
mod grid;
mod run;

pub use config::{DatasetConfig, ExperimentConfig, GridConfig, Method, ScoreChoice};
pub use grid::{run_grid, GridCell, GridReport};
pub use run::{run_er_baseline, run_online_cl, run_with_dataset, write_run_artifacts, RunArtifacts, RunOutcome, RunSummary};
