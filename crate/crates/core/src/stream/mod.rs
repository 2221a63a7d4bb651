//! Online class-incremental streams.
//!
//! Classes are partitioned into tasks by a seeded assignment; each task's
//! samples are shuffled and cut into mini-batches, and tasks are presented
//! one after another. Every sample is seen exactly once.

mod csv;
mod synthetic;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use self::csv::load_csv;
pub use synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: usize,
    pub task: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub class_count: usize,
    pub samples: Vec<Sample>,
    /// Original label strings for datasets loaded from disk.
    pub class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.class_count];
        for s in &self.samples {
            sizes[s.label] += 1;
        }
        sizes
    }

    fn with_samples(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            dim: self.dim,
            class_count: self.class_count,
            samples,
            class_names: self.class_names.clone(),
        }
    }

    /// Split each class independently, putting `round(fraction * n_c)` samples
    /// in the test half. Both halves keep file/id order.
    pub fn train_test_split<R: Rng + ?Sized>(&self, fraction: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(invalid(format!("test fraction must be in [0, 1), got {fraction}")));
        }
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.class_count];
        for (i, s) in self.samples.iter().enumerate() {
            by_class[s.label].push(i);
        }
        let mut is_test = vec![false; self.samples.len()];
        for idx in &mut by_class {
            idx.shuffle(rng);
            let n_test = (fraction * idx.len() as f64).round() as usize;
            for &i in &idx[..n_test] {
                is_test[i] = true;
            }
        }
        let (test, train): (Vec<_>, Vec<_>) = self
            .samples
            .iter()
            .cloned()
            .zip(is_test)
            .partition(|(_, t)| *t);
        Ok((
            self.with_samples(train.into_iter().map(|(s, _)| s).collect()),
            self.with_samples(test.into_iter().map(|(s, _)| s).collect()),
        ))
    }
}

/// The assign function ψ from classes to tasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskAssignment {
    psi: BTreeMap<usize, usize>,
    tasks: Vec<Vec<usize>>,
}

impl TaskAssignment {
    pub fn task_of(&self, class: usize) -> Option<usize> {
        self.psi.get(&class).copied()
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn classes_per_task(&self) -> usize {
        self.tasks.first().map_or(0, Vec::len)
    }

    /// Classes of task `t`, in assignment order.
    pub fn classes_of(&self, t: usize) -> &[usize] {
        &self.tasks[t]
    }

    /// All classes, task by task.
    pub fn ranked_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.tasks.iter().flatten().copied()
    }
}

/// Shuffle `classes` and cut them into `task_count` equal consecutive groups.
pub fn assign_classes<R: Rng + ?Sized>(classes: &[usize], task_count: usize, rng: &mut R) -> Result<TaskAssignment> {
    if task_count == 0 || classes.is_empty() || !classes.len().is_multiple_of(task_count) {
        return Err(invalid(format!(
            "{} classes cannot be split evenly into {task_count} tasks",
            classes.len()
        )));
    }
    let mut order = classes.to_vec();
    order.sort_unstable();
    if order.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("duplicate class label in task assignment"));
    }
    order.shuffle(rng);
    let per = classes.len() / task_count;
    let tasks: Vec<Vec<usize>> = order.chunks(per).map(<[usize]>::to_vec).collect();
    let psi = tasks
        .iter()
        .enumerate()
        .flat_map(|(t, cs)| cs.iter().map(move |&c| (c, t)))
        .collect();
    Ok(TaskAssignment { psi, tasks })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongTailSpec {
    pub rho: f64,
    pub n_max: usize,
}

/// `n_i = max(1, round(n_max * rho^(i/(k-1))))` for rank `i` of `k` classes.
pub fn longtail_sizes(spec: &LongTailSpec, k: usize) -> Result<Vec<usize>> {
    if !(spec.rho > 0.0 && spec.rho <= 1.0) {
        return Err(invalid(format!("imbalance factor must be in (0, 1], got {}", spec.rho)));
    }
    if k <= 1 {
        return Ok(vec![spec.n_max; k]);
    }
    Ok((0..k)
        .map(|i| {
            let n = spec.n_max as f64 * spec.rho.powf(i as f64 / (k - 1) as f64);
            (n.round() as usize).max(1)
        })
        .collect())
}

/// Subsample classes to long-tailed sizes, largest first in task order.
pub fn apply_longtail(data: &Dataset, psi: &TaskAssignment, spec: &LongTailSpec) -> Result<Dataset> {
    let ranked: Vec<usize> = psi.ranked_classes().collect();
    let sizes = longtail_sizes(spec, ranked.len())?;
    let mut keep = vec![0usize; data.class_count];
    for (c, n) in ranked.iter().zip(sizes) {
        keep[*c] = n;
    }
    let mut taken = vec![0usize; data.class_count];
    let samples = data
        .samples
        .iter()
        .filter(|s| {
            taken[s.label] += 1;
            taken[s.label] <= keep[s.label]
        })
        .cloned()
        .collect();
    Ok(data.with_samples(samples))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamBatch {
    pub samples: Vec<Sample>,
    pub task: usize,
    pub batch_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskOrdering {
    #[default]
    ByTaskIndex,
    /// Larger tasks first; ties keep task index order.
    ByTaskSizeDesc,
}

impl fmt::Display for TaskOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskOrdering::ByTaskIndex => "by_task_index",
            TaskOrdering::ByTaskSizeDesc => "by_task_size_desc",
        })
    }
}

impl FromStr for TaskOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by_task_index" => Ok(TaskOrdering::ByTaskIndex),
            "by_task_size_desc" => Ok(TaskOrdering::ByTaskSizeDesc),
            _ => Err(invalid(format!("unknown task ordering {s:?}"))),
        }
    }
}

/// Stamp every sample with its task under `psi`. Samples of unassigned
/// classes are rejected.
pub fn tag_tasks(data: &Dataset, psi: &TaskAssignment) -> Result<Vec<Sample>> {
    data.samples
        .iter()
        .map(|s| {
            let task = psi
                .task_of(s.label)
                .ok_or_else(|| invalid(format!("class {} has no task", s.label)))?;
            Ok(Sample { task, ..s.clone() })
        })
        .collect()
}

/// Single-pass batch sequence: tasks in `ordering`, each task shuffled and
/// chunked into batches of `batch_size` (the last one may be short).
pub fn make_stream<R: Rng + ?Sized>(
    data: &Dataset,
    psi: &TaskAssignment,
    batch_size: usize,
    ordering: TaskOrdering,
    rng: &mut R,
) -> Result<Vec<StreamBatch>> {
    if batch_size == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    let mut per_task: Vec<Vec<Sample>> = vec![Vec::new(); psi.task_count()];
    for s in tag_tasks(data, psi)? {
        per_task[s.task].push(s);
    }
    if let Some(t) = per_task.iter().position(Vec::is_empty) {
        return Err(invalid(format!("task {t} has no samples")));
    }
    let mut order: Vec<usize> = (0..per_task.len()).collect();
    if ordering == TaskOrdering::ByTaskSizeDesc {
        order.sort_by_key(|&t| std::cmp::Reverse(per_task[t].len()));
    }

    let mut batches = Vec::new();
    for t in order {
        let mut samples = std::mem::take(&mut per_task[t]);
        samples.shuffle(rng);
        for chunk in samples.chunks(batch_size) {
            batches.push(StreamBatch {
                samples: chunk.to_vec(),
                task: t,
                batch_index: batches.len(),
            });
        }
    }
    Ok(batches)
}
