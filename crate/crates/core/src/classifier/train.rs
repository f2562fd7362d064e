//! Training for the built-in models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::{LinearModel, NearestCentroidModel};
use super::Dataset;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Real;

/// Per-class mean images.
pub fn train_nearest_centroid<T: Real>(data: &Dataset<T>) -> Result<NearestCentroidModel<T>> {
    let counts = data.class_counts()?;
    if counts.len() < 2 {
        return Err(Error::InvalidConfig("training data needs at least two classes".into()));
    }
    let first = &data.images[0];
    let mut sums: Vec<Vec<T>> = vec![vec![T::zero(); first.samples().len()]; counts.len()];
    for (img, &label) in data.images.iter().zip(&data.labels) {
        for (acc, &v) in sums[label as usize].iter_mut().zip(img.samples()) {
            *acc += v;
        }
    }
    let centroids = sums
        .into_iter()
        .zip(&counts)
        .map(|(sum, &n)| {
            let n = T::from_usize_lossy(n);
            Image::new(first.width(), first.height(), first.channels(), sum.into_iter().map(|v| v / n).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    NearestCentroidModel::new(centroids)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Coefficient of `½‖W‖²` added to the mean cross-entropy.
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// Objective value after each epoch, starting with the initial value.
    pub losses: Vec<f64>,
}

/// Mean multinomial cross-entropy plus L2 penalty on the weights.
///
/// Parameters are laid out class-major: `classes × (dim + 1)` with the
/// bias last in each row.
pub struct LogisticObjective<'a, T> {
    data: &'a Dataset<T>,
    classes: usize,
    dim: usize,
    l2: f64,
}

impl<'a, T: Real> LogisticObjective<'a, T> {
    pub fn new(data: &'a Dataset<T>, l2: f64) -> Result<Self> {
        let classes = data.class_counts()?.len();
        if classes < 2 {
            return Err(Error::InvalidConfig("training data needs at least two classes".into()));
        }
        Ok(Self {
            data,
            classes,
            dim: data.images[0].samples().len(),
            l2,
        })
    }

    pub fn num_params(&self) -> usize {
        self.classes * (self.dim + 1)
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, None)
    }

    pub fn loss_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let loss = self.evaluate(params, Some(&mut grad));
        (loss, grad)
    }

    fn evaluate(&self, params: &[f64], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let row = self.dim + 1;
        let n = self.data.len() as f64;
        let mut loss = 0.0;
        let mut scores = vec![0.0; self.classes];
        for (img, &label) in self.data.images.iter().zip(&self.data.labels) {
            let x = img.samples();
            for (c, s) in scores.iter_mut().enumerate() {
                let w = &params[c * row..(c + 1) * row];
                *s = w[self.dim] + w[..self.dim].iter().zip(x).map(|(&wi, &xi)| wi * xi.to_f64_lossy()).sum::<f64>();
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|&s| (s - max).exp()).sum();
            let log_z = max + z.ln();
            loss += log_z - scores[label as usize];
            if let Some(g) = grad.as_deref_mut() {
                for c in 0..self.classes {
                    let p = (scores[c] - log_z).exp();
                    let coef = (p - if c == label as usize { 1.0 } else { 0.0 }) / n;
                    let gw = &mut g[c * row..(c + 1) * row];
                    for (gi, &xi) in gw[..self.dim].iter_mut().zip(x) {
                        *gi += coef * xi.to_f64_lossy();
                    }
                    gw[self.dim] += coef;
                }
            }
        }
        loss /= n;
        let mut penalty = 0.0;
        for c in 0..self.classes {
            for j in 0..self.dim {
                let w = params[c * row + j];
                penalty += w * w;
                if let Some(g) = grad.as_deref_mut() {
                    g[c * row + j] += self.l2 * w;
                }
            }
        }
        loss + 0.5 * self.l2 * penalty
    }
}

/// Full-batch gradient descent on [`LogisticObjective`].
///
/// A step that would raise the objective is retried with half the learning
/// rate, so the reported losses never increase.
pub fn train_logistic<T: Real>(data: &Dataset<T>, config: &LogisticConfig) -> Result<(LinearModel<T>, TrainingReport)> {
    if !(config.learning_rate > 0.0) || !(config.l2 >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive and l2 non-negative (got {}, {})",
            config.learning_rate, config.l2
        )));
    }
    let objective = LogisticObjective::new(data, config.l2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params: Vec<f64> = (0..objective.num_params()).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let (mut loss, mut grad) = objective.loss_and_grad(&params);
    let mut losses = vec![loss];
    let mut lr = config.learning_rate;
    let mut candidate = vec![0.0; params.len()];
    for _ in 0..config.epochs {
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, &p), &g) in candidate.iter_mut().zip(&params).zip(&grad) {
                *c = p - lr * g;
            }
            let trial = objective.loss(&candidate);
            if trial <= loss {
                std::mem::swap(&mut params, &mut candidate);
                let (l, g) = objective.loss_and_grad(&params);
                loss = l;
                grad = g;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        losses.push(loss);
        if !accepted {
            break;
        }
    }

    let first = &data.images[0];
    let row = objective.dim + 1;
    let mut weights = Vec::with_capacity(objective.classes);
    let mut biases = Vec::with_capacity(objective.classes);
    for c in 0..objective.classes {
        let w = &params[c * row..(c + 1) * row];
        weights.push(Image::new(
            first.width(),
            first.height(),
            first.channels(),
            w[..objective.dim].iter().map(|&v| T::lit(v)).collect(),
        )?);
        biases.push(T::lit(w[objective.dim]));
    }
    Ok((LinearModel::new(weights, biases)?, TrainingReport { losses }))
}
