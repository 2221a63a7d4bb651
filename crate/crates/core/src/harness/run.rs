use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{DatasetConfig, ExperimentConfig, Method};
use crate::error::{invalid, Error, Result};
use crate::memory::{ReplayMemory, Retention};
use crate::metrics::AccuracyMatrix;
use crate::model::{init_model, predict_label, Example, LogitModel, Model, Sgd, SgdConfig};
use crate::rng;
use crate::scoring::{score_sample, PerturbationFamily};
use crate::stream::{
    apply_longtail, assign_classes, generate_synthetic, load_csv, make_stream, tag_tasks, Dataset,
    LongTailSpec, Sample, SyntheticSpec,
};

/// Final metrics of one run. Accuracy and forgetting are fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fingerprint: String,
    pub seed: u64,
    pub score: String,
    pub strategy: String,
    pub memory: usize,
    pub last_accuracy: f64,
    /// Undefined for single-task streams.
    pub last_forgetting: Option<f64>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub matrix: AccuracyMatrix,
    pub memory: ReplayMemory,
    /// Task ids in presentation order; column `j` of the matrix is `task_order[j]`.
    pub task_order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    pub summary_json: PathBuf,
    pub accuracy_csv: PathBuf,
    pub memory_csv: PathBuf,
    pub fingerprint: String,
}

fn load_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset> {
    match &cfg.dataset {
        DatasetConfig::Synthetic {
            class_count,
            dim,
            samples_per_class,
            center_scale,
            noise_scale,
            ..
        } => generate_synthetic(&SyntheticSpec {
            class_count: *class_count,
            dim: *dim,
            samples_per_class: *samples_per_class,
            class_center_scale: *center_scale,
            noise_scale: *noise_scale,
            seed: rng::derive_seed(seed, rng::DATA_GEN),
        }),
        DatasetConfig::Csv { path, label_column, .. } => load_csv(path, label_column),
    }
}

fn accuracy(model: &Model, samples: &[&Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("task has no test samples"));
    }
    let mut correct = 0usize;
    for s in samples {
        if predict_label(model, &s.features)? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

/// Online class-incremental training with replay.
///
/// For each stream batch: draw a replay set of `batch_size` samples from
/// past tasks, take one SGD step on batch plus replay, then update the
/// memory with the stream batch. At every task boundary all seen tasks are
/// evaluated on their held-out split.
pub fn run_online_cl(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = load_dataset(cfg, seed)?;
    run_with_dataset(cfg, seed, &data)
}

/// [`run_online_cl`] on an already materialized dataset; `cfg.dataset` only
/// supplies the test fraction and long-tail factor.
pub fn run_with_dataset(cfg: &ExperimentConfig, seed: u64, data: &Dataset) -> Result<RunOutcome> {
    cfg.validate()?;
    let classes = data.class_count;
    if classes != cfg.task_count * cfg.classes_per_task {
        return Err(Error::Config(format!(
            "dataset has {classes} classes, config expects {} x {}",
            cfg.task_count, cfg.classes_per_task
        )));
    }
    let (train, test) = data.train_test_split(cfg.dataset.test_fraction(), &mut rng::substream(seed, rng::TEST_SPLIT))?;
    let class_ids: Vec<usize> = (0..classes).collect();
    let psi = assign_classes(&class_ids, cfg.task_count, &mut rng::substream(seed, rng::TASK_ASSIGNMENT))?;
    let train = match cfg.dataset.longtail_rho() {
        Some(rho) => {
            let n_max = train.class_sizes().into_iter().max().unwrap_or(0);
            apply_longtail(&train, &psi, &LongTailSpec { rho, n_max })?
        }
        None => train,
    };
    let test = tag_tasks(&test, &psi)?;
    let stream = make_stream(&train, &psi, cfg.batch_size, cfg.ordering, &mut rng::substream(seed, rng::STREAM_SHUFFLE))?;

    let mut model = init_model(cfg.model, data.dim, classes, cfg.hidden, &mut rng::substream(seed, rng::MODEL_INIT))?;
    let mut sgd = Sgd::new(SgdConfig {
        learning_rate: cfg.learning_rate,
    })?;
    let family = PerturbationFamily::new(cfg.tta_views, cfg.tta_sigma, rng::derive_seed(seed, rng::TTA))?;
    let retention = match cfg.method {
        Method::ErRandom => Retention::Random,
        Method::Uncertainty { score, strategy } => Retention::Ranked { kind: score, strategy },
    };
    let mut memory = ReplayMemory::new(cfg.memory_capacity, retention);
    let mut replay_rng = rng::substream(seed, rng::REPLAY);
    let mut retention_rng = rng::substream(seed, rng::ER_RETENTION);

    let mut matrix = AccuracyMatrix::new(cfg.task_count);
    let mut task_order: Vec<usize> = Vec::new();
    let evaluate = |model: &Model, order: &[usize], matrix: &mut AccuracyMatrix| -> Result<()> {
        let accs = order
            .iter()
            .map(|&t| accuracy(model, &test.iter().filter(|s| s.task == t).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        matrix.record_task_end(order.len() - 1, accs)
    };

    for batch in &stream {
        let at = |e: Error| Error::AtBatch {
            batch: batch.batch_index,
            source: Box::new(e),
        };
        if task_order.last() != Some(&batch.task) {
            if !task_order.is_empty() {
                evaluate(&model, &task_order, &mut matrix).map_err(at)?;
            }
            task_order.push(batch.task);
        }

        let replay = memory.sample_replay(cfg.batch_size, batch.task, &mut replay_rng);
        let examples: Vec<Example<'_>> = batch
            .samples
            .iter()
            .chain(&replay)
            .map(|s| (s.features.as_slice(), s.label))
            .collect();
        sgd.step(&mut model, &examples).map_err(at)?;

        match cfg.method {
            Method::ErRandom => memory.update_random(&batch.samples, &mut retention_rng),
            Method::Uncertainty { score, .. } => {
                let scorer = |s: &Sample| score_sample(s, &model, score, &family).map(|u| u.value);
                memory.update(&batch.samples, &scorer)
            }
        }
        .map_err(at)?;
    }
    if !task_order.is_empty() {
        evaluate(&model, &task_order, &mut matrix)?;
    }

    let last_forgetting = if cfg.task_count >= 2 {
        Some(matrix.last_forgetting()?)
    } else {
        None
    };
    debug_assert!(model.params().iter().all(|p| p.is_finite()));
    Ok(RunOutcome {
        summary: RunSummary {
            fingerprint: cfg.fingerprint(),
            seed,
            score: cfg.method.score_label().to_string(),
            strategy: cfg.method.strategy_label().to_string(),
            memory: cfg.memory_capacity,
            last_accuracy: matrix.last_accuracy()?,
            last_forgetting,
        },
        matrix,
        memory,
        task_order,
    })
}

/// The same loop with class-balanced random retention.
pub fn run_er_baseline(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    let er = ExperimentConfig {
        method: Method::ErRandom,
        ..cfg.clone()
    };
    run_online_cl(&er, seed)
}

/// Write summary JSON, accuracy matrix CSV and memory dump CSV under `dir`.
pub fn write_run_artifacts(dir: &Path, outcome: &RunOutcome) -> Result<RunArtifacts> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = &outcome.summary;
    let stem = format!("{}-{}-m{}-s{}", s.score, s.strategy, s.memory, s.seed);
    let summary_json = dir.join(format!("{stem}.summary.json"));
    let accuracy_csv = dir.join(format!("{stem}.accuracy.csv"));
    let memory_csv = dir.join(format!("{stem}.memory.csv"));

    let create = |p: &Path| fs::File::create(p).map_err(|e| Error::io(p, e));
    let mut json = serde_json::to_string_pretty(s)?;
    json.push('\n');
    fs::write(&summary_json, json).map_err(|e| Error::io(&summary_json, e))?;
    outcome.matrix.write_csv(create(&accuracy_csv)?)?;
    outcome.memory.write_dump(create(&memory_csv)?)?;
    Ok(RunArtifacts {
        summary_json,
        accuracy_csv,
        memory_csv,
        fingerprint: s.fingerprint.clone(),
    })
}
