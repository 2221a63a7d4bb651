use super::{check_input, logit_residual, Example, LogitModel};
use crate::error::{invalid, Result};

/// `z = W x + b`. Parameters are stored as `W` (row-major, `classes x dim`)
/// followed by `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    dim: usize,
    classes: usize,
    params: Vec<f64>,
}

impl LogisticRegression {
    pub fn zeros(dim: usize, classes: usize) -> Self {
        LogisticRegression {
            dim,
            classes,
            params: vec![0.0; classes * dim + classes],
        }
    }

    pub fn from_parts(dim: usize, classes: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != classes * dim || bias.len() != classes {
            return Err(invalid("logistic regression parameter shapes do not match"));
        }
        let mut params = weights;
        params.extend(bias);
        Ok(LogisticRegression { dim, classes, params })
    }

    pub fn from_flat(dim: usize, classes: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != classes * dim + classes {
            return Err(invalid("logistic regression parameter count mismatch"));
        }
        Ok(LogisticRegression { dim, classes, params })
    }

    fn weights(&self) -> &[f64] {
        &self.params[..self.classes * self.dim]
    }

    fn bias(&self) -> &[f64] {
        &self.params[self.classes * self.dim..]
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights()
            .chunks_exact(self.dim)
            .zip(self.bias())
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

impl LogitModel for LogisticRegression {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn class_count(&self) -> usize {
        self.classes
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_input(x, self.dim)?;
        Ok(self.logits(x))
    }

    fn loss_and_grad(&self, batch: &[Example<'_>]) -> Result<(f64, Vec<f64>)> {
        let n = batch.len().max(1) as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let bias_at = self.classes * self.dim;
        for &(x, y) in batch {
            check_input(x, self.dim)?;
            let mut r = self.logits(x);
            loss += logit_residual(&mut r, y)?;
            for (c, rc) in r.iter().enumerate() {
                let row = &mut grad[c * self.dim..(c + 1) * self.dim];
                for (g, v) in row.iter_mut().zip(x) {
                    *g += rc * v / n;
                }
                grad[bias_at + c] += rc / n;
            }
        }
        Ok((loss / n, grad))
    }
}
