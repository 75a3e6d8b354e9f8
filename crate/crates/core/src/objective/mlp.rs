use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Objective};
use crate::error::{Error, Result};
use crate::param::ParamVector;

/// Fully connected tanh network with a softmax cross-entropy head.
///
/// Parameters are laid out layer by layer: the `fan_in × fan_out` weight
/// matrix in row-major order followed by the `fan_out` biases.
/// [`Objective::value`] and [`Objective::gradient`] use the whole training
/// set; [`Objective::step_loss_grad`] uses the mini-batch scheduled for that
/// step.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<usize>,
    seed: u64,
    train: Dataset,
    validation: Option<Dataset>,
    batch_size: usize,
}

/// Builds an MLP over `data` with all rows used for training and full-batch steps.
pub fn make_mlp(layer_sizes: &[usize], seed: u64, data: Dataset) -> Result<Mlp> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid("an MLP needs at least an input and an output layer"));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::invalid("layer sizes must be positive"));
    }
    if layer_sizes[0] != data.features() {
        return Err(Error::invalid(format!(
            "input layer has {} units but data has {} features",
            layer_sizes[0],
            data.features()
        )));
    }
    if *layer_sizes.last().unwrap() != data.classes() {
        return Err(Error::invalid(format!(
            "output layer has {} units but data has {} classes",
            layer_sizes.last().unwrap(),
            data.classes()
        )));
    }
    let batch_size = data.rows();
    Ok(Mlp {
        layers: layer_sizes.to_vec(),
        seed,
        train: data,
        validation: None,
        batch_size,
    })
}

impl Mlp {
    pub fn with_validation(mut self, validation: Dataset) -> Result<Self> {
        if validation.features() != self.train.features() || validation.classes() != self.train.classes() {
            return Err(Error::invalid("validation set shape differs from training set"));
        }
        self.validation = Some(validation);
        Ok(self)
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        self.batch_size = batch_size.min(self.train.rows());
        Ok(self)
    }

    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn train_set(&self) -> &Dataset {
        &self.train
    }

    pub fn validation_set(&self) -> Option<&Dataset> {
        self.validation.as_ref()
    }

    /// Glorot-uniform weights, zero biases; a pure function of the seed.
    pub fn initial_params(&self) -> ParamVector {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut params = Vec::with_capacity(self.param_count());
        for pair in self.layers.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-s..s)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        ParamVector::from_vec_unchecked(params)
    }

    fn param_count(&self) -> usize {
        self.layers.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// Row order used by epoch `epoch`: a seeded shuffle of the training rows.
    pub fn epoch_order(&self, epoch: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.train.rows()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);
        order
    }

    /// Training rows of batch `index` within epoch `epoch`.
    pub fn batch_rows(&self, epoch: usize, index: usize) -> Vec<usize> {
        let order = self.epoch_order(epoch);
        let start = (index * self.batch_size).min(order.len());
        let end = (start + self.batch_size).min(order.len());
        order[start..end].to_vec()
    }

    /// Class probabilities for one input row.
    pub fn predict_proba(&self, w: &[f64], x: &[f64]) -> Vec<f64> {
        let logits = self.forward(w, x).pop().unwrap();
        softmax(&logits)
    }

    /// Mean cross-entropy and accuracy over a dataset.
    pub fn metrics(&self, w: &[f64], data: &Dataset) -> (f64, f64) {
        let mut loss = 0.0;
        let mut correct = 0usize;
        for i in 0..data.rows() {
            let logits = self.forward(w, data.row(i)).pop().unwrap();
            loss += cross_entropy(&logits, data.label(i));
            if argmax(&logits) == data.label(i) {
                correct += 1;
            }
        }
        let n = data.rows() as f64;
        (loss / n, correct as f64 / n)
    }

    /// Activations per layer: entry 0 is the input, the last entry holds the
    /// output logits (pre-softmax), hidden entries are post-tanh.
    fn forward(&self, w: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        let last = self.layers.len() - 2;
        for (l, pair) in self.layers.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let weights = &w[offset..offset + fan_in * fan_out];
            let bias = &w[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let input = acts.last().unwrap();
            let mut out = bias.to_vec();
            for (i, a) in input.iter().enumerate() {
                for (o, wij) in out.iter_mut().zip(&weights[i * fan_out..(i + 1) * fan_out]) {
                    *o += a * wij;
                }
            }
            if l != last {
                out.iter_mut().for_each(|z| *z = z.tanh());
            }
            acts.push(out);
        }
        acts
    }

    /// Mean loss and gradient over the given rows of `data`.
    fn loss_grad_rows(&self, w: &[f64], data: &Dataset, rows: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; w.len()];
        let mut loss = 0.0;
        for &r in rows {
            let acts = self.forward(w, data.row(r));
            let logits = acts.last().unwrap();
            let label = data.label(r);
            loss += cross_entropy(logits, label);

            // dL/dlogits = softmax − onehot
            let mut delta = softmax(logits);
            delta[label] -= 1.0;

            let mut offset = grad.len();
            for l in (0..self.layers.len() - 1).rev() {
                let (fan_in, fan_out) = (self.layers[l], self.layers[l + 1]);
                offset -= fan_in * fan_out + fan_out;
                let input = &acts[l];
                let (gw, gb) = grad[offset..offset + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (b, d) in gb.iter_mut().zip(&delta) {
                    *b += d;
                }
                for (i, a) in input.iter().enumerate() {
                    for (g, d) in gw[i * fan_out..(i + 1) * fan_out].iter_mut().zip(&delta) {
                        *g += a * d;
                    }
                }
                if l > 0 {
                    let weights = &w[offset..offset + fan_in * fan_out];
                    delta = (0..fan_in)
                        .map(|i| {
                            let back: f64 = weights[i * fan_out..(i + 1) * fan_out]
                                .iter()
                                .zip(&delta)
                                .map(|(wij, d)| wij * d)
                                .sum();
                            back * (1.0 - input[i] * input[i])
                        })
                        .collect();
                }
            }
        }
        let n = rows.len() as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    fn all_rows(&self) -> Vec<usize> {
        (0..self.train.rows()).collect()
    }
}

impl Objective for Mlp {
    fn name(&self) -> &str {
        "spiral-mlp"
    }

    fn dim(&self) -> usize {
        self.param_count()
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.metrics(w, &self.train).0
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        self.loss_grad_rows(w, &self.train, &self.all_rows()).1
    }

    fn steps_per_epoch(&self) -> Option<usize> {
        Some(self.train.rows().div_ceil(self.batch_size))
    }

    fn step_loss_grad(&self, step: usize, w: &[f64]) -> (f64, Vec<f64>) {
        let per_epoch = self.train.rows().div_ceil(self.batch_size);
        let rows = self.batch_rows(step / per_epoch, step % per_epoch);
        self.loss_grad_rows(w, &self.train, &rows)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
        .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::make_dataset;

    fn spiral_mlp() -> Mlp {
        make_mlp(&[2, 16, 2], 11, make_dataset(7, 64).unwrap()).unwrap()
    }

    #[test]
    fn parameter_count() {
        assert_eq!(spiral_mlp().dim(), 2 * 16 + 16 + 16 * 2 + 2);
        assert_eq!(spiral_mlp().initial_params().dim(), 82);
    }

    #[test]
    fn initialization_is_seeded() {
        let a = spiral_mlp().initial_params();
        let b = spiral_mlp().initial_params();
        assert_eq!(a, b);
        let other = make_mlp(&[2, 16, 2], 12, make_dataset(7, 64).unwrap()).unwrap();
        assert_ne!(a, other.initial_params());
    }

    #[test]
    fn rejects_bad_layers() {
        let data = make_dataset(1, 8).unwrap();
        assert!(make_mlp(&[2], 0, data.clone()).is_err());
        assert!(make_mlp(&[2, 0, 2], 0, data.clone()).is_err());
        assert!(make_mlp(&[3, 4, 2], 0, data.clone()).is_err());
        assert!(make_mlp(&[2, 4, 3], 0, data).is_err());
    }

    #[test]
    fn softmax_normalizes_and_loss_is_non_negative() {
        let mlp = spiral_mlp();
        let w = mlp.initial_params();
        for i in 0..mlp.train_set().rows() {
            let p = mlp.predict_proba(&w, mlp.train_set().row(i));
            assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        assert!(mlp.value(&w) >= 0.0);
    }

    #[test]
    fn batches_cover_each_epoch_once() {
        let mlp = spiral_mlp().with_batch_size(10).unwrap();
        assert_eq!(mlp.steps_per_epoch(), Some(7));
        let mut seen: Vec<usize> = (0..7).flat_map(|i| mlp.batch_rows(2, i)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..64).collect::<Vec<_>>());
        assert_eq!(mlp.batch_rows(2, 3), mlp.batch_rows(2, 3));
        assert_ne!(mlp.epoch_order(0), mlp.epoch_order(1));
    }

    #[test]
    fn full_batch_step_matches_objective() {
        let mlp = spiral_mlp();
        let w = mlp.initial_params();
        let (loss, grad) = mlp.step_loss_grad(0, &w);
        assert!((loss - mlp.value(&w)).abs() < 1e-12);
        let full = mlp.gradient(&w);
        for (a, b) in grad.iter().zip(&full) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
