//! Feedforward neural-network surrogate of the simulator.

mod network;
mod standardizer;
mod train;
mod tune;

pub use network::{Activations, Dense, Jacobian, SurrogateModel};
pub use standardizer::Standardizer;
pub use train::{train, EpochStats, TrainConfig, TrainReport, MIN_RECORDS};
pub use tune::{sample_configs, select_best, tune_hyperparameters, tune_with_report, TuneReport, TuneTrial};

use alloc::vec::Vec;

use crate::error::Result;

/// A differentiable model of standardized outputs over standardized inputs.
///
/// [`SurrogateModel`] is the production implementation; tests plug in
/// analytic stand-ins.
pub trait Surrogate {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn standardizer(&self) -> &Standardizer;
    fn forward_std(&self, x_std: &[f64]) -> Result<Vec<f64>>;
    /// Evaluates `ŷ_std`, asks `cotangent` for `∂L/∂ŷ_std`, and returns
    /// `(ŷ_std, ∂L/∂x_std)`.
    fn pullback_std(
        &self,
        x_std: &[f64],
        cotangent: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl Surrogate for SurrogateModel {
    fn input_dim(&self) -> usize {
        SurrogateModel::input_dim(self)
    }

    fn output_dim(&self) -> usize {
        SurrogateModel::output_dim(self)
    }

    fn standardizer(&self) -> &Standardizer {
        SurrogateModel::standardizer(self)
    }

    fn forward_std(&self, x_std: &[f64]) -> Result<Vec<f64>> {
        SurrogateModel::forward_std(self, x_std)
    }

    fn pullback_std(
        &self,
        x_std: &[f64],
        cotangent: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut cache = Activations::default();
        self.forward_into(x_std, &mut cache)?;
        let y = cache.output().to_vec();
        let cot = cotangent(&y);
        let mut grad = Vec::new();
        let mut scratch = Vec::new();
        self.backward_input(&cache, &cot, &mut grad, &mut scratch)?;
        Ok((y, grad))
    }
}
