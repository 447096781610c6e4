use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::network::{Activations, SurrogateModel};
use super::Standardizer;
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::linalg::axpy;
use crate::rng;

/// Minimum number of records `train` accepts.
pub const MIN_RECORDS: usize = 10;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

const TAG_INIT: u64 = 0x1417;
const TAG_SHUFFLE: u64 = 0x5_4FF1;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_layers: vec![64, 64],
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 500,
            validation_fraction: 0.2,
            early_stop_patience: 25,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.hidden_layers.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.early_stop_patience == 0 {
            return bad("batch_size, max_epochs and early_stop_patience must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }

    /// The train/validation partition `train` uses for this config.
    pub fn split(&self, data: &Dataset) -> Result<Split> {
        data.split_indices(self.validation_fraction, self.seed)
    }

    pub fn layer_sizes(&self, input_dim: usize, output_dim: usize) -> Vec<usize> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&self.hidden_layers);
        sizes.push(output_dim);
        sizes
    }

    pub fn parameter_count(&self, input_dim: usize, output_dim: usize) -> usize {
        self.layer_sizes(input_dim, output_dim)
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Per-output mean absolute errors after one epoch, in standardized units.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mae: Vec<f64>,
    pub validation_mae: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    /// Validation MAE of the freshly initialized network.
    pub initial_validation_mae: Vec<f64>,
    pub epochs: Vec<EpochStats>,
    /// 0 when no epoch beat the initial weights.
    pub best_epoch: usize,
    pub best_validation_mae: Vec<f64>,
    pub stopped_early: bool,
}

impl TrainReport {
    /// Mean over outputs of the restored model's validation MAE.
    pub fn best_validation_loss(&self) -> f64 {
        mean(&self.best_validation_mae)
    }

    pub fn initial_validation_loss(&self) -> f64 {
        mean(&self.initial_validation_mae)
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    beta1_t: f64,
    beta2_t: f64,
}

impl Adam {
    fn new(shapes: &[usize]) -> Self {
        Adam {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            beta1_t: 1.0,
            beta2_t: 1.0,
        }
    }

    fn begin_step(&mut self) {
        self.beta1_t *= ADAM_BETA1;
        self.beta2_t *= ADAM_BETA2;
    }

    fn update(&mut self, slot: usize, params: &mut [f64], grads: &[f64], lr: f64) {
        let (c1, c2) = (1.0 - self.beta1_t, 1.0 - self.beta2_t);
        let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPSILON);
        }
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-output MAE of `model` on already-standardized rows.
fn evaluate_mae(model: &SurrogateModel, xs: &[Vec<f64>], ys: &[Vec<f64>], cache: &mut Activations) -> Result<Vec<f64>> {
    let n_out = model.output_dim();
    let mut sum = vec![0.0; n_out];
    for (x, y) in xs.iter().zip(ys) {
        model.forward_into(x, cache)?;
        for ((s, p), t) in sum.iter_mut().zip(cache.output()).zip(y) {
            *s += (p - t).abs();
        }
    }
    let count = xs.len().max(1) as f64;
    Ok(sum.into_iter().map(|s| s / count).collect())
}

/// Fits a fresh network to `data` by minibatch Adam on the mean absolute error.
///
/// The standardizer is fitted on the training split only. Early stopping
/// watches the mean validation MAE and the returned model carries the best
/// weights seen, including the initial ones, so its validation MAE never
/// exceeds that of the untrained network.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<(SurrogateModel, TrainReport)> {
    config.validate()?;
    if data.len() < MIN_RECORDS {
        return Err(Error::DatasetTooSmall {
            len: data.len(),
            min: MIN_RECORDS,
        });
    }
    if data.input_dim() == 0 || data.output_dim() == 0 {
        return Err(Error::Empty("dataset dimensions"));
    }
    data.check_finite()?;

    let split = config.split(data)?;
    let standardizer = Standardizer::fit_subset(data, &split.train)?;
    let standardize = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        idx.iter()
            .map(|&i| {
                (
                    standardizer.standardize_input(&data.inputs()[i]),
                    standardizer.standardize_output(&data.outputs()[i]),
                )
            })
            .unzip()
    };
    let (train_x, train_y) = standardize(&split.train);
    let (val_x, val_y) = standardize(&split.validation);

    let sizes = config.layer_sizes(data.input_dim(), data.output_dim());
    let init_seed = rng::derive_seed(config.seed, TAG_INIT, 0);
    let mut model = SurrogateModel::initialized(&sizes, standardizer.clone(), init_seed)?;
    model.train_seed = config.seed;

    let n_layers = model.layers.len();
    let n_out = model.output_dim();
    let mut cache = Activations::default();

    let initial_validation_mae = evaluate_mae(&model, &val_x, &val_y, &mut cache)?;
    let mut best_loss = mean(&initial_validation_mae);
    let mut best_layers = model.layers.clone();
    let mut best_validation_mae = initial_validation_mae.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;

    let mut grad_w: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect();
    let mut grad_b: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect();
    let mut shapes = Vec::with_capacity(2 * n_layers);
    for l in &model.layers {
        shapes.push(l.weights.len());
        shapes.push(l.bias.len());
    }
    let mut adam = Adam::new(&shapes);
    let mut shuffle_rng = rng::seeded(rng::derive_seed(config.seed, TAG_SHUFFLE, 0));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut delta = Vec::new();
    let mut delta_prev = Vec::new();
    let mut epochs = Vec::new();

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut train_sum = vec![0.0; n_out];
        for batch in order.chunks(config.batch_size) {
            for g in grad_w.iter_mut().chain(grad_b.iter_mut()) {
                g.fill(0.0);
            }
            let scale = 1.0 / (batch.len() * n_out) as f64;
            for &i in batch {
                model.forward_into(&train_x[i], &mut cache)?;
                delta.clear();
                for ((p, t), s) in cache.output().iter().zip(&train_y[i]).zip(train_sum.iter_mut()) {
                    let err = p - t;
                    *s += err.abs();
                    delta.push(sign(err) * scale);
                }
                for l in (0..n_layers).rev() {
                    let layer = &model.layers[l];
                    let input = &cache.acts[l];
                    let gw = &mut grad_w[l];
                    for (o, &d) in delta.iter().enumerate() {
                        if d != 0.0 {
                            axpy(d, input, &mut gw[o * layer.inputs..(o + 1) * layer.inputs]);
                        }
                    }
                    for (gb, d) in grad_b[l].iter_mut().zip(&delta) {
                        *gb += d;
                    }
                    if l > 0 {
                        delta_prev.resize(layer.inputs, 0.0);
                        layer.transpose_mul(&delta, &mut delta_prev);
                        for (d, a) in delta_prev.iter_mut().zip(input) {
                            *d *= 1.0 - a * a;
                        }
                        core::mem::swap(&mut delta, &mut delta_prev);
                    }
                }
            }
            adam.begin_step();
            for (l, layer) in model.layers.iter_mut().enumerate() {
                adam.update(2 * l, &mut layer.weights, &grad_w[l], config.learning_rate);
                adam.update(2 * l + 1, &mut layer.bias, &grad_b[l], config.learning_rate);
            }
        }
        let count = train_x.len() as f64;
        let train_mae: Vec<f64> = train_sum.into_iter().map(|s| s / count).collect();
        if !train_mae.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("training loss"));
        }
        let validation_mae = evaluate_mae(&model, &val_x, &val_y, &mut cache)?;
        let loss = mean(&validation_mae);
        if loss < best_loss {
            best_loss = loss;
            best_layers.clone_from(&model.layers);
            best_validation_mae.clone_from(&validation_mae);
            best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
        }
        epochs.push(EpochStats {
            epoch,
            train_mae,
            validation_mae,
        });
        if since_best >= config.early_stop_patience {
            stopped_early = true;
            break;
        }
    }

    model.layers = best_layers;
    Ok((
        model,
        TrainReport {
            initial_validation_mae,
            epochs,
            best_epoch,
            best_validation_mae,
            stopped_early,
        },
    ))
}
