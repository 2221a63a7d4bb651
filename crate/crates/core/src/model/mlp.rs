use super::{check_input, logit_residual, Example, LogitModel};
use crate::error::{invalid, Result};

/// `z = W2 tanh(W1 x + b1) + b2`.
///
/// Flat layout: `W1` (`hidden x dim`), `b1`, `W2` (`classes x hidden`), `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhMlp {
    dim: usize,
    hidden: usize,
    classes: usize,
    params: Vec<f64>,
}

struct Offsets {
    b1: usize,
    w2: usize,
    b2: usize,
}

impl TanhMlp {
    pub fn parameter_count(dim: usize, hidden: usize, classes: usize) -> usize {
        hidden * dim + hidden + classes * hidden + classes
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dim: usize,
        hidden: usize,
        classes: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        if w1.len() != hidden * dim || b1.len() != hidden || w2.len() != classes * hidden || b2.len() != classes {
            return Err(invalid("mlp parameter shapes do not match"));
        }
        let mut params = w1;
        params.extend(b1);
        params.extend(w2);
        params.extend(b2);
        Ok(TanhMlp { dim, hidden, classes, params })
    }

    pub fn from_flat(dim: usize, hidden: usize, classes: usize, params: Vec<f64>) -> Result<Self> {
        if hidden == 0 || params.len() != Self::parameter_count(dim, hidden, classes) {
            return Err(invalid("mlp parameter count mismatch"));
        }
        Ok(TanhMlp { dim, hidden, classes, params })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn offsets(&self) -> Offsets {
        let b1 = self.hidden * self.dim;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        Offsets { b1, w2, b2 }
    }

    /// Returns hidden activations and logits.
    fn run(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let o = self.offsets();
        let p = &self.params;
        let h: Vec<f64> = p[..o.b1]
            .chunks_exact(self.dim)
            .zip(&p[o.b1..o.w2])
            .map(|(row, b)| (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b).tanh())
            .collect();
        let z = p[o.w2..o.b2]
            .chunks_exact(self.hidden)
            .zip(&p[o.b2..])
            .map(|(row, b)| row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        (h, z)
    }
}

impl LogitModel for TanhMlp {
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
        Ok(self.run(x).1)
    }

    fn loss_and_grad(&self, batch: &[Example<'_>]) -> Result<(f64, Vec<f64>)> {
        let n = batch.len().max(1) as f64;
        let o = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut dh = vec![0.0; self.hidden];
        for &(x, y) in batch {
            check_input(x, self.dim)?;
            let (h, mut r) = self.run(x);
            loss += logit_residual(&mut r, y)?;

            dh.iter_mut().for_each(|v| *v = 0.0);
            for (c, rc) in r.iter().enumerate() {
                let w_row = &self.params[o.w2 + c * self.hidden..o.w2 + (c + 1) * self.hidden];
                let g_row = &mut grad[o.w2 + c * self.hidden..o.w2 + (c + 1) * self.hidden];
                for k in 0..self.hidden {
                    g_row[k] += rc * h[k] / n;
                    dh[k] += rc * w_row[k];
                }
                grad[o.b2 + c] += rc / n;
            }
            for k in 0..self.hidden {
                // tanh' = 1 - tanh^2
                let da = dh[k] * (1.0 - h[k] * h[k]) / n;
                let g_row = &mut grad[k * self.dim..(k + 1) * self.dim];
                for (g, v) in g_row.iter_mut().zip(x) {
                    *g += da * v;
                }
                grad[o.b1 + k] += da;
            }
        }
        Ok((loss / n, grad))
    }
}
