//! Predictive-uncertainty scores computed from model logits.
//!
//! Every score is oriented the same way: a larger value means the model is
//! more uncertain about the sample. Bregman Information and the agreement
//! score need several perturbed views of the input (test-time augmentation);
//! the confidence-based scores use the unperturbed view only.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::LogitModel;
use crate::rng;
use crate::stream::Sample;

/// Which uncertainty score drives memory retention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Least confidence.
    Lc,
    /// Smallest margin.
    Sm,
    /// Ratio of confidence.
    Rc,
    /// Entropy.
    En,
    /// Label disagreement across perturbed views.
    Rm,
    /// Bregman Information of the log-sum-exp over perturbed views.
    Bi,
}

impl ScoreKind {
    pub const ALL: [ScoreKind; 6] = [
        ScoreKind::Lc,
        ScoreKind::Sm,
        ScoreKind::Rc,
        ScoreKind::En,
        ScoreKind::Rm,
        ScoreKind::Bi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Lc => "lc",
            ScoreKind::Sm => "sm",
            ScoreKind::Rc => "rc",
            ScoreKind::En => "en",
            ScoreKind::Rm => "rm",
            ScoreKind::Bi => "bi",
        }
    }

    /// True when the score needs all perturbed views, not just the clean one.
    pub fn uses_views(self) -> bool {
        matches!(self, ScoreKind::Rm | ScoreKind::Bi)
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown score kind {s:?} (expected lc|sm|rc|en|rm|bi)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyScore {
    pub kind: ScoreKind,
    pub value: f64,
}

/// Softmax output; entries are nonnegative and sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("empty probability vector"));
        }
        if values.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(invalid("probability entries must lie in [0, 1]"));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbabilityVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest and second-largest entries. For a single class the runner-up is 0.
    fn top_two(&self) -> (f64, f64) {
        let mut first = f64::NEG_INFINITY;
        let mut second = 0.0_f64;
        for &p in &self.0 {
            if p > first {
                second = if first.is_finite() { first } else { second };
                first = p;
            } else if p > second {
                second = p;
            }
        }
        (first, second)
    }
}

/// P rows of logits for the perturbed views of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    rows: Vec<Vec<f64>>,
}

impl LogitMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(invalid("logit matrix needs at least one row"));
        };
        let classes = first.len();
        if classes == 0 {
            return Err(invalid("logit rows must be nonempty"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != classes {
                return Err(invalid(format!(
                    "ragged logit matrix: row {i} has {} entries, expected {classes}",
                    row.len()
                )));
            }
            check_finite(row)?;
        }
        Ok(LogitMatrix { rows })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn views(&self) -> usize {
        self.rows.len()
    }

    pub fn classes(&self) -> usize {
        self.rows[0].len()
    }
}

fn check_finite(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(invalid("empty logit vector"));
    }
    match z.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(invalid(format!("non-finite logit at index {i}: {}", z[i]))),
        None => Ok(()),
    }
}

fn lse_unchecked(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = z.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `ln Σ exp(z_j)` with the max-shift trick.
pub fn log_sum_exp(z: &[f64]) -> Result<f64> {
    check_finite(z)?;
    Ok(lse_unchecked(z))
}

pub fn softmax(z: &[f64]) -> Result<ProbabilityVector> {
    check_finite(z)?;
    let lse = lse_unchecked(z);
    let mut p: Vec<f64> = z.iter().map(|&v| (v - lse).exp()).collect();
    // exp rounding can leave the sum a few ulps off 1
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    Ok(ProbabilityVector(p))
}

/// `1 - max_j p_j`.
pub fn score_least_confidence(p: &ProbabilityVector) -> UncertaintyScore {
    let (first, _) = p.top_two();
    UncertaintyScore {
        kind: ScoreKind::Lc,
        value: (1.0 - first).max(0.0),
    }
}

/// `1 - (p_(1) - p_(2))`, so a vanishing margin scores 1.
pub fn score_smallest_margin(p: &ProbabilityVector) -> UncertaintyScore {
    let (first, second) = p.top_two();
    UncertaintyScore {
        kind: ScoreKind::Sm,
        value: (1.0 - (first - second)).clamp(0.0, 1.0),
    }
}

/// `p_(2) / p_(1)`; exactly 1 on ties.
pub fn score_ratio_confidence(p: &ProbabilityVector) -> UncertaintyScore {
    let (first, second) = p.top_two();
    let value = if first == second { 1.0 } else { second / first };
    UncertaintyScore {
        kind: ScoreKind::Rc,
        value,
    }
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn score_entropy(p: &ProbabilityVector) -> UncertaintyScore {
    let h: f64 = p
        .as_slice()
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    UncertaintyScore {
        kind: ScoreKind::En,
        value: h.max(0.0),
    }
}

/// Disagreement rate of the predicted labels: `1 - maxvote / P`.
pub fn score_rm_agreement(predicted: &[usize]) -> Result<UncertaintyScore> {
    if predicted.is_empty() {
        return Err(invalid("agreement score needs at least one predicted label"));
    }
    let mut sorted = predicted.to_vec();
    sorted.sort_unstable();
    let mut max_votes = 0;
    let mut run = 0;
    for (i, label) in sorted.iter().enumerate() {
        run = if i > 0 && sorted[i - 1] == *label { run + 1 } else { 1 };
        max_votes = max_votes.max(run);
    }
    Ok(UncertaintyScore {
        kind: ScoreKind::Rm,
        value: 1.0 - max_votes as f64 / predicted.len() as f64,
    })
}

/// Jensen gap of LSE over the views:
/// `mean_i LSE(z_i) - LSE(mean_i z_i)`.
pub fn score_bregman_information(z: &LogitMatrix) -> UncertaintyScore {
    let views = z.views() as f64;
    let mean_lse = z.rows().iter().map(|r| lse_unchecked(r)).sum::<f64>() / views;
    let mut mean_row = vec![0.0; z.classes()];
    for row in z.rows() {
        for (m, v) in mean_row.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean_row.iter_mut().for_each(|m| *m /= views);
    let gap = mean_lse - lse_unchecked(&mean_row);
    UncertaintyScore {
        kind: ScoreKind::Bi,
        // convexity guarantees gap >= 0 up to rounding
        value: gap.max(0.0),
    }
}

/// Test-time perturbations: view 0 is the clean input, views `1..count`
/// add isotropic Gaussian noise of scale `noise_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFamily {
    pub count: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl PerturbationFamily {
    pub fn new(count: usize, noise_scale: f64, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("perturbation count must be at least 1"));
        }
        if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
            return Err(invalid(format!("noise scale must be finite and >= 0, got {noise_scale}")));
        }
        Ok(PerturbationFamily {
            count,
            noise_scale,
            seed,
        })
    }
}

impl Default for PerturbationFamily {
    fn default() -> Self {
        PerturbationFamily {
            count: 4,
            noise_scale: 0.1,
            seed: 0,
        }
    }
}

/// View `view` of sample `sample_id`. Pure in `(x, sample_id, view, family)`.
pub fn perturb(
    x: &[f64],
    sample_id: u64,
    view: usize,
    family: &PerturbationFamily,
) -> Result<Vec<f64>> {
    if view >= family.count {
        return Err(invalid(format!(
            "view index {view} out of range for {} views",
            family.count
        )));
    }
    if view == 0 || family.noise_scale == 0.0 {
        return Ok(x.to_vec());
    }
    let mut rng = rng::keyed_substream(family.seed, rng::TTA, &[sample_id, view as u64]);
    Ok(x.iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            v + family.noise_scale * n
        })
        .collect())
}

/// Score one sample under the current model.
pub fn score_sample<M: LogitModel + ?Sized>(
    sample: &Sample,
    model: &M,
    kind: ScoreKind,
    family: &PerturbationFamily,
) -> Result<UncertaintyScore> {
    if !kind.uses_views() {
        let p = softmax(&model.forward(&sample.features)?)?;
        return Ok(match kind {
            ScoreKind::Lc => score_least_confidence(&p),
            ScoreKind::Sm => score_smallest_margin(&p),
            ScoreKind::Rc => score_ratio_confidence(&p),
            ScoreKind::En => score_entropy(&p),
            ScoreKind::Rm | ScoreKind::Bi => unreachable!(),
        });
    }
    let mut rows = Vec::with_capacity(family.count);
    for view in 0..family.count {
        let x = perturb(&sample.features, sample.id, view, family)?;
        rows.push(model.forward(&x)?);
    }
    match kind {
        ScoreKind::Bi => Ok(score_bregman_information(&LogitMatrix::new(rows)?)),
        _ => {
            let labels: Vec<usize> = rows.iter().map(|r| argmax(r)).collect();
            score_rm_agreement(&labels)
        }
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}
