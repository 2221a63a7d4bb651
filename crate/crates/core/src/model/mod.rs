//! Logit models trained online with plain SGD on cross-entropy.
//!
//! Two reference models are provided: multinomial logistic regression and a
//! one-hidden-layer tanh network. Both expose their parameters as a single
//! flat vector and compute gradients in closed form.

mod checkpoint;
mod logreg;
mod mlp;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scoring::{argmax, log_sum_exp};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use logreg::LogisticRegression;
pub use mlp::TanhMlp;

/// A labeled input borrowed for one training step.
pub type Example<'a> = (&'a [f64], usize);

pub trait LogitModel: Send + Sync {
    fn input_dim(&self) -> usize;
    fn class_count(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Unnormalized class scores for `x`.
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Mean cross-entropy over `batch` and its gradient with respect to
    /// `params()`, laid out identically.
    fn loss_and_grad(&self, batch: &[Example<'_>]) -> Result<(f64, Vec<f64>)>;
}

pub(crate) fn check_input(x: &[f64], dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(invalid(format!(
            "input has {} features, model expects {dim}",
            x.len()
        )));
    }
    Ok(())
}

/// `LSE(z) - z_y`.
pub fn cross_entropy(z: &[f64], y: usize) -> Result<f64> {
    if y >= z.len() {
        return Err(invalid(format!("label {y} out of range for {} classes", z.len())));
    }
    Ok((log_sum_exp(z)? - z[y]).max(0.0))
}

/// Writes `softmax(z) - onehot(y)` into `z` and returns the cross-entropy.
/// Non-finite logits propagate as NaN so the optimizer can report divergence.
pub(crate) fn logit_residual(z: &mut [f64], y: usize) -> Result<f64> {
    if y >= z.len() {
        return Err(invalid(format!("label {y} out of range for {} classes", z.len())));
    }
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    let loss = lse - z[y];
    for v in z.iter_mut() {
        *v = (*v - lse).exp();
    }
    z[y] -= 1.0;
    Ok(loss)
}

/// Argmax of the logits, lowest class index on ties.
pub fn predict_label<M: LogitModel + ?Sized>(model: &M, x: &[f64]) -> Result<usize> {
    Ok(argmax(&model.forward(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig { learning_rate: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStepReport {
    pub loss_before: f64,
    pub grad_norm: f64,
    pub step_count: u64,
}

/// Vanilla SGD: no momentum, no weight decay.
#[derive(Debug, Clone)]
pub struct Sgd {
    cfg: SgdConfig,
    steps: u64,
}

impl Sgd {
    pub fn new(cfg: SgdConfig) -> Result<Self> {
        if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
            return Err(invalid(format!("learning rate must be finite and >= 0, got {}", cfg.learning_rate)));
        }
        Ok(Sgd { cfg, steps: 0 })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One step on the mean loss of `batch`. On a non-finite gradient the
    /// parameters are left untouched.
    pub fn step<M: LogitModel + ?Sized>(
        &mut self,
        model: &mut M,
        batch: &[Example<'_>],
    ) -> Result<TrainStepReport> {
        if batch.is_empty() {
            return Err(invalid("training batch is empty"));
        }
        let (loss, grad) = model.loss_and_grad(batch)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDivergence { step: self.steps });
        }
        let lr = self.cfg.learning_rate;
        if lr != 0.0 {
            for (p, g) in model.params_mut().iter_mut().zip(&grad) {
                *p -= lr * g;
            }
        }
        self.steps += 1;
        Ok(TrainStepReport {
            loss_before: loss,
            grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
            step_count: self.steps,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Mlp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(ModelKind::Logreg),
            "mlp" => Ok(ModelKind::Mlp),
            _ => Err(invalid(format!("unknown model kind {s:?} (expected logreg|mlp)"))),
        }
    }
}

/// Either reference model, selected at run time.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Logreg(LogisticRegression),
    Mlp(TanhMlp),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Logreg(_) => ModelKind::Logreg,
            Model::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Model::Logreg(_) => 0,
            Model::Mlp(m) => m.hidden(),
        }
    }

    fn inner(&self) -> &dyn LogitModel {
        match self {
            Model::Logreg(m) => m,
            Model::Mlp(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn LogitModel {
        match self {
            Model::Logreg(m) => m,
            Model::Mlp(m) => m,
        }
    }
}

impl LogitModel for Model {
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn class_count(&self) -> usize {
        self.inner().class_count()
    }
    fn params(&self) -> &[f64] {
        self.inner().params()
    }
    fn params_mut(&mut self) -> &mut [f64] {
        self.inner_mut().params_mut()
    }
    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().forward(x)
    }
    fn loss_and_grad(&self, batch: &[Example<'_>]) -> Result<(f64, Vec<f64>)> {
        self.inner().loss_and_grad(batch)
    }
}

/// Gaussian weights with standard deviation `1/sqrt(fan_in)`, zero biases.
pub fn init_model<R: Rng + ?Sized>(
    kind: ModelKind,
    input_dim: usize,
    classes: usize,
    hidden: usize,
    rng: &mut R,
) -> Result<Model> {
    if input_dim == 0 || classes == 0 {
        return Err(invalid("model needs at least one input and one class"));
    }
    let mut draw = |n: usize, fan_in: usize| -> Vec<f64> {
        let scale = 1.0 / (fan_in as f64).sqrt();
        (0..n)
            .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    };
    Ok(match kind {
        ModelKind::Logreg => {
            let w = draw(classes * input_dim, input_dim);
            Model::Logreg(LogisticRegression::from_parts(input_dim, classes, w, vec![0.0; classes])?)
        }
        ModelKind::Mlp => {
            if hidden == 0 {
                return Err(invalid("mlp hidden width must be at least 1"));
            }
            let w1 = draw(hidden * input_dim, input_dim);
            let w2 = draw(classes * hidden, hidden);
            Model::Mlp(TanhMlp::from_parts(
                input_dim,
                hidden,
                classes,
                w1,
                vec![0.0; hidden],
                w2,
                vec![0.0; classes],
            )?)
        }
    })
}
