use alloc::vec::Vec;

use rand::Rng;

use super::train::{train, TrainConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::rng;

const WIDTHS: [usize; 4] = [16, 32, 64, 128];
const BATCHES: [usize; 3] = [16, 32, 64];
const LR_RANGE: (f64, f64) = (1e-4, 1e-2);

/// One sampled configuration and how it trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneTrial {
    pub config: TrainConfig,
    /// `None` when training failed.
    pub validation_loss: Option<f64>,
    pub parameters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub best: TrainConfig,
    pub trials: Vec<TuneTrial>,
}

/// Draws `budget` configurations: 1–3 hidden layers with widths from
/// {16, 32, 64, 128}, log-uniform learning rate in [1e-4, 1e-2], batch size
/// from {16, 32, 64}. Remaining fields come from `base`.
pub fn sample_configs(budget: usize, seed: u64, base: &TrainConfig) -> Vec<TrainConfig> {
    let mut rng = rng::seeded(rng::derive_seed(seed, 0x7E7E, 0));
    let (lo, hi) = (libm::log(LR_RANGE.0), libm::log(LR_RANGE.1));
    (0..budget as u64)
        .map(|i| {
            let depth = rng.random_range(1..=3usize);
            let hidden_layers = (0..depth).map(|_| WIDTHS[rng.random_range(0..WIDTHS.len())]).collect();
            let learning_rate = libm::exp(rng.random_range(lo..=hi));
            let batch_size = BATCHES[rng.random_range(0..BATCHES.len())];
            TrainConfig {
                hidden_layers,
                learning_rate,
                batch_size,
                seed: rng::derive_seed(seed, 0x7E7F, i),
                ..base.clone()
            }
        })
        .collect()
}

/// Index of the lowest validation loss; equal losses go to fewer parameters,
/// then to the earlier trial.
pub fn select_best(trials: &[TuneTrial]) -> Option<usize> {
    trials
        .iter()
        .enumerate()
        .filter_map(|(i, t)| t.validation_loss.map(|loss| (i, loss, t.parameters)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.2.cmp(&b.2)).then(a.0.cmp(&b.0)))
        .map(|(i, _, _)| i)
}

/// Random-search hyperparameter tuning; each sampled config is trained once.
pub fn tune_with_report(data: &Dataset, budget: usize, seed: u64, base: &TrainConfig) -> Result<TuneReport> {
    if budget == 0 {
        return Err(Error::InvalidConfig("tuning budget must be at least 1".into()));
    }
    let configs = sample_configs(budget, seed, base);
    let trials: Vec<TuneTrial> = par::map_indexed(configs.len(), |i| {
        let config = &configs[i];
        let validation_loss = match train(data, config) {
            Ok((_, report)) => Some(report.best_validation_loss()),
            Err(err) => {
                log::warn!("tuning trial {i} failed: {err}");
                None
            }
        };
        TuneTrial {
            config: config.clone(),
            validation_loss,
            parameters: config.parameter_count(data.input_dim(), data.output_dim()),
        }
    });
    let best = select_best(&trials).ok_or(Error::TuningFailed(budget))?;
    Ok(TuneReport {
        best: trials[best].config.clone(),
        trials,
    })
}

pub fn tune_hyperparameters(data: &Dataset, budget: usize, seed: u64) -> Result<TrainConfig> {
    tune_with_report(data, budget, seed, &TrainConfig::default()).map(|r| r.best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn trial(loss: Option<f64>, parameters: usize) -> TuneTrial {
        TuneTrial {
            config: TrainConfig::default(),
            validation_loss: loss,
            parameters,
        }
    }

    #[test]
    fn tie_goes_to_fewer_parameters() {
        let trials = vec![trial(Some(0.2), 500), trial(Some(0.2), 100), trial(Some(0.3), 10)];
        assert_eq!(select_best(&trials), Some(1));
    }

    #[test]
    fn failed_trials_are_skipped() {
        assert_eq!(select_best(&[trial(None, 1), trial(Some(0.9), 9)]), Some(1));
        assert_eq!(select_best(&[trial(None, 1)]), None);
    }

    #[test]
    fn sampled_configs_respect_search_space() {
        let configs = sample_configs(200, 11, &TrainConfig::default());
        for c in &configs {
            assert!((1..=3).contains(&c.hidden_layers.len()));
            assert!(c.hidden_layers.iter().all(|w| WIDTHS.contains(w)));
            assert!(BATCHES.contains(&c.batch_size));
            assert!(c.learning_rate >= 1e-4 * (1.0 - 1e-12) && c.learning_rate <= 1e-2 * (1.0 + 1e-12));
        }
        assert_eq!(configs, sample_configs(200, 11, &TrainConfig::default()));
    }
}
