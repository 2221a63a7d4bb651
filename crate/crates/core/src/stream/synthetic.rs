use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Sample};
use crate::error::{invalid, Result};
use crate::rng;

/// Isotropic Gaussian blobs, one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub class_count: usize,
    pub dim: usize,
    pub samples_per_class: usize,
    /// Standard deviation of the random class centers.
    pub class_center_scale: f64,
    /// Within-class standard deviation.
    pub noise_scale: f64,
    pub seed: u64,
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.class_count == 0 || spec.dim == 0 || spec.samples_per_class == 0 {
        return Err(invalid("synthetic spec needs positive class count, dim and samples per class"));
    }
    if !(spec.noise_scale > 0.0) || !(spec.class_center_scale >= 0.0) {
        return Err(invalid("synthetic spec needs noise_scale > 0 and class_center_scale >= 0"));
    }
    let mut rng = rng::substream(spec.seed, rng::DATA_GEN);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let centers: Vec<Vec<f64>> = (0..spec.class_count)
        .map(|_| (0..spec.dim).map(|_| spec.class_center_scale * normal()).collect())
        .collect();
    let mut samples = Vec::with_capacity(spec.class_count * spec.samples_per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            let features = center.iter().map(|c| c + spec.noise_scale * normal()).collect();
            samples.push(Sample {
                id: samples.len() as u64,
                features,
                label,
                task: 0,
            });
        }
    }
    Ok(Dataset {
        dim: spec.dim,
        class_count: spec.class_count,
        samples,
        class_names: None,
    })
}
