//! Studies built on the core loop: leave-one-out input sensitivity, 2-D
//! loss landscapes, training-size sweeps, the quasi-random baseline
//! comparison and predicted-versus-actual exports.

mod baseline;
mod landscape;
mod predictions;
mod sensitivity;
mod sweep;

pub use baseline::{mc_baseline, BaselineComparison, BaselineConfig, TrialFailure};
pub use landscape::{landscape, linspace, LandscapeGrid, LandscapeSource};
pub use predictions::{export_predictions, pearson, prediction_correlations, PredictionRow};
pub use sensitivity::{sensitivity, SensitivityEntry, SensitivityReport};
pub use sweep::{training_size_sweep, SweepData, SweepReport, SweepRow, HELD_OUT_SIZE};

/// Mean of the finite entries, `None` when there are none.
pub(crate) fn finite_mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}
