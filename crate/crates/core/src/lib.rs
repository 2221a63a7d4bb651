//! Online class-incremental learning with an uncertainty-driven,
//! class-balanced replay memory.
//!
//! The crate provides the pieces needed to compare memory population
//! strategies (bottom-k, step-size, top-k) under six uncertainty scores,
//! including Bregman Information estimated with test-time perturbations:
//!
//! - [`scoring`]: stable log-sum-exp, softmax and the uncertainty scores
//! - [`memory`]: the fixed-capacity replay memory and replay sampling
//! - [`model`]: logit models trained by SGD with closed-form gradients
//! - [`stream`]: task assignment, long-tailed sizing, batching, data loading
//! - [`metrics`]: accuracy matrix, last accuracy and last forgetting
//! - [`harness`]: single runs, the ER baseline and seeded grids

pub mod error;
pub mod harness;
pub mod memory;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scoring;
pub mod stream;

pub use error::{Error, Result};
pub use harness::{
    run_er_baseline, run_grid, run_online_cl, ExperimentConfig, GridConfig, GridReport, Method, RunSummary,
};
pub use memory::{MemoryEntry, ReplayMemory, Retention, SampleScorer, Strategy};
pub use metrics::{relative_improvement, AccuracyMatrix};
pub use model::{LogitModel, Model, ModelKind, Sgd, SgdConfig};
pub use scoring::{PerturbationFamily, ScoreKind, UncertaintyScore};
pub use stream::{Dataset, Sample, StreamBatch, TaskAssignment};
