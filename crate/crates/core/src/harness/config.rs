use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::memory::Strategy;
use crate::model::ModelKind;
use crate::scoring::ScoreKind;
use crate::stream::TaskOrdering;

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    Synthetic {
        #[serde(default = "defaults::class_count")]
        class_count: usize,
        #[serde(default = "defaults::dim")]
        dim: usize,
        #[serde(default = "defaults::samples_per_class")]
        samples_per_class: usize,
        #[serde(default = "defaults::center_scale")]
        center_scale: f64,
        #[serde(default = "defaults::noise_scale")]
        noise_scale: f64,
        #[serde(default = "defaults::test_fraction")]
        test_fraction: f64,
        /// Long-tail imbalance factor applied to the training split.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        longtail_rho: Option<f64>,
    },
    Csv {
        path: PathBuf,
        label_column: String,
        #[serde(default = "defaults::test_fraction")]
        test_fraction: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        longtail_rho: Option<f64>,
    },
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig::Synthetic {
            class_count: defaults::class_count(),
            dim: defaults::dim(),
            samples_per_class: defaults::samples_per_class(),
            center_scale: defaults::center_scale(),
            noise_scale: defaults::noise_scale(),
            test_fraction: defaults::test_fraction(),
            longtail_rho: None,
        }
    }
}

impl DatasetConfig {
    pub fn test_fraction(&self) -> f64 {
        match self {
            DatasetConfig::Synthetic { test_fraction, .. } | DatasetConfig::Csv { test_fraction, .. } => *test_fraction,
        }
    }

    pub fn longtail_rho(&self) -> Option<f64> {
        match self {
            DatasetConfig::Synthetic { longtail_rho, .. } | DatasetConfig::Csv { longtail_rho, .. } => *longtail_rho,
        }
    }

    fn validate(&self) -> Result<()> {
        let tf = self.test_fraction();
        if !(tf > 0.0 && tf < 1.0) {
            return Err(Error::Config(format!("test_fraction must be in (0, 1), got {tf}")));
        }
        if let Some(rho) = self.longtail_rho() {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::Config(format!("longtail_rho must be in (0, 1], got {rho}")));
            }
        }
        if let DatasetConfig::Synthetic {
            class_count,
            dim,
            samples_per_class,
            center_scale,
            noise_scale,
            ..
        } = self
        {
            if *class_count == 0 || *dim == 0 || *samples_per_class == 0 {
                return Err(Error::Config("synthetic counts must be positive".into()));
            }
            if !(*noise_scale > 0.0) || !(*center_scale > 0.0) {
                return Err(Error::Config("synthetic scales must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Memory management rule of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Experience replay with class-balanced random retention.
    ErRandom,
    Uncertainty { score: ScoreKind, strategy: Strategy },
}

impl Method {
    pub fn score_label(&self) -> &'static str {
        match self {
            Method::ErRandom => "er-random",
            Method::Uncertainty { score, .. } => score.as_str(),
        }
    }

    pub fn strategy_label(&self) -> &'static str {
        match self {
            Method::ErRandom => "random",
            Method::Uncertainty { strategy, .. } => strategy.as_str(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.score_label(), self.strategy_label())
    }
}

/// A score axis entry: one of the six scores, or the ER baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScoreChoice {
    Score(ScoreKind),
    ErRandom,
}

impl FromStr for ScoreChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "er-random" || s == "er" {
            Ok(ScoreChoice::ErRandom)
        } else {
            s.parse().map(ScoreChoice::Score)
        }
    }
}

impl TryFrom<String> for ScoreChoice {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ScoreChoice> for String {
    fn from(c: ScoreChoice) -> String {
        match c {
            ScoreChoice::Score(k) => k.as_str().to_string(),
            ScoreChoice::ErRandom => "er-random".to_string(),
        }
    }
}

/// Complete description of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub task_count: usize,
    pub classes_per_task: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub memory_capacity: usize,
    pub method: Method,
    pub model: ModelKind,
    pub hidden: usize,
    pub tta_views: usize,
    pub tta_sigma: f64,
    pub ordering: TaskOrdering,
}

impl ExperimentConfig {
    /// Short stable hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        if self.task_count == 0 || self.classes_per_task == 0 || self.batch_size == 0 {
            return Err(Error::Config("task_count, classes_per_task and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be positive, got {}", self.learning_rate)));
        }
        if self.model == ModelKind::Mlp && self.hidden == 0 {
            return Err(Error::Config("hidden must be positive for mlp".into()));
        }
        if self.tta_views == 0 || !(self.tta_sigma >= 0.0 && self.tta_sigma.is_finite()) {
            return Err(Error::Config("tta_views must be >= 1 and tta_sigma >= 0".into()));
        }
        Ok(())
    }
}

/// A grid of runs as read from a config file. Every axis is a list; the
/// cartesian product of scores, strategies and memory sizes is run for
/// every seed, plus one ER baseline per memory size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub dataset: DatasetConfig,
    #[serde(default = "defaults::task_count")]
    pub task_count: usize,
    #[serde(default = "defaults::classes_per_task")]
    pub classes_per_task: usize,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "defaults::memory")]
    pub memory: Vec<usize>,
    #[serde(default = "defaults::scores")]
    pub scores: Vec<ScoreChoice>,
    #[serde(default = "defaults::strategies")]
    pub strategies: Vec<Strategy>,
    /// Add the ER baseline cell for every memory size.
    #[serde(default = "defaults::yes")]
    pub baseline: bool,
    #[serde(default = "defaults::model")]
    pub model: ModelKind,
    #[serde(default = "defaults::hidden")]
    pub hidden: usize,
    #[serde(default = "defaults::tta_views")]
    pub tta_views: usize,
    #[serde(default = "defaults::tta_sigma")]
    pub tta_sigma: f64,
    #[serde(default)]
    pub ordering: TaskOrdering,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults parse")
    }
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: GridConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config("memory and seeds must be nonempty".into()));
        }
        if self.methods().is_empty() {
            return Err(Error::Config("grid has no cells".into()));
        }
        if let DatasetConfig::Synthetic { class_count, .. } = &self.dataset {
            if *class_count != self.task_count * self.classes_per_task {
                return Err(Error::Config(format!(
                    "class_count {class_count} != task_count {} x classes_per_task {}",
                    self.task_count, self.classes_per_task
                )));
            }
        }
        self.experiment(0, Method::ErRandom).validate()
    }

    /// Distinct methods in table order: ER first, then scores x strategies.
    pub fn methods(&self) -> Vec<Method> {
        let mut out = Vec::new();
        if self.baseline || self.scores.contains(&ScoreChoice::ErRandom) {
            out.push(Method::ErRandom);
        }
        for choice in &self.scores {
            if let ScoreChoice::Score(score) = *choice {
                for &strategy in &self.strategies {
                    let m = Method::Uncertainty { score, strategy };
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
            }
        }
        out
    }

    pub fn experiment(&self, memory_capacity: usize, method: Method) -> ExperimentConfig {
        ExperimentConfig {
            dataset: self.dataset.clone(),
            task_count: self.task_count,
            classes_per_task: self.classes_per_task,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            memory_capacity,
            method,
            model: self.model,
            hidden: self.hidden,
            tta_views: self.tta_views,
            tta_sigma: self.tta_sigma,
            ordering: self.ordering,
        }
    }
}

pub(crate) mod defaults {
    use super::ScoreChoice;
    use crate::memory::Strategy;
    use crate::model::ModelKind;
    use crate::scoring::ScoreKind;

    pub fn class_count() -> usize {
        10
    }
    pub fn dim() -> usize {
        16
    }
    pub fn samples_per_class() -> usize {
        200
    }
    pub fn center_scale() -> f64 {
        1.0
    }
    pub fn noise_scale() -> f64 {
        1.0
    }
    pub fn test_fraction() -> f64 {
        0.2
    }
    pub fn task_count() -> usize {
        5
    }
    pub fn classes_per_task() -> usize {
        2
    }
    pub fn batch_size() -> usize {
        10
    }
    pub fn learning_rate() -> f64 {
        0.1
    }
    pub fn memory() -> Vec<usize> {
        vec![50, 100]
    }
    pub fn scores() -> Vec<ScoreChoice> {
        ScoreKind::ALL.into_iter().map(ScoreChoice::Score).collect()
    }
    pub fn strategies() -> Vec<Strategy> {
        Strategy::ALL.to_vec()
    }
    pub fn yes() -> bool {
        true
    }
    pub fn model() -> ModelKind {
        ModelKind::Logreg
    }
    pub fn hidden() -> usize {
        32
    }
    pub fn tta_views() -> usize {
        4
    }
    pub fn tta_sigma() -> f64 {
        0.1
    }
    pub fn seeds() -> Vec<u64> {
        vec![0, 1, 2]
    }
}
