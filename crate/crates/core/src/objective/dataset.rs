use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major table of features with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: usize,
    classes: usize,
    inputs: Vec<f64>,
    labels: Vec<usize>,
    seed: u64,
}

impl Dataset {
    pub fn new(features: usize, classes: usize, inputs: Vec<f64>, labels: Vec<usize>, seed: u64) -> Result<Self> {
        if features == 0 || classes == 0 {
            return Err(Error::invalid("dataset needs at least one feature and one class"));
        }
        if inputs.len() != features * labels.len() {
            return Err(Error::invalid(format!(
                "{} input values do not form {} rows of {} features",
                inputs.len(),
                labels.len(),
                features
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::invalid(format!("label {bad} outside 0..{classes}")));
        }
        Ok(Self { features, classes, inputs, labels, seed })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.features..(i + 1) * self.features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Splits off the last `fraction` of rows, returning `(head, tail)`.
    pub fn split_tail(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::invalid("split fraction must lie in [0, 1)"));
        }
        let tail = (self.rows() as f64 * fraction).round() as usize;
        let head = self.rows() - tail;
        if head == 0 {
            return Err(Error::invalid("split leaves no training rows"));
        }
        let cut = head * self.features;
        let part = |inputs: &[f64], labels: &[usize]| Dataset {
            features: self.features,
            classes: self.classes,
            inputs: inputs.to_vec(),
            labels: labels.to_vec(),
            seed: self.seed,
        };
        Ok((
            part(&self.inputs[..cut], &self.labels[..head]),
            part(&self.inputs[cut..], &self.labels[head..]),
        ))
    }
}

/// Two interleaved 2-D spirals, one per class.
///
/// Each point sits at a random position along its arm, so rows are not
/// ordered by radius. Rows alternate between classes (even rows are class
/// 0), so any contiguous tail of the table is balanced and spread over the
/// whole spiral.
pub fn make_dataset(seed: u64, n: usize) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid("spiral dataset needs n >= 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let class = k % 2;
        let frac: f64 = rng.random();
        let radius = 0.05 + 0.95 * frac;
        let theta = 3.0 * PI * frac + PI * class as f64;
        let jitter_x: f64 = rng.random_range(-0.03..0.03);
        let jitter_y: f64 = rng.random_range(-0.03..0.03);
        inputs.push(radius * theta.cos() + jitter_x);
        inputs.push(radius * theta.sin() + jitter_y);
        labels.push(class);
    }
    Dataset::new(2, 2, inputs, labels, seed)
}
