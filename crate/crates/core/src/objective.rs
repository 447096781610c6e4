//! Weighted target-matching objective with soft box penalties.
//!
//! ```text
//! g(x) = (1/n) Σ_k w_k |t_k − ŷ_k|  +  α Σ_i max(0, lo_i − u_i)  +  α Σ_i max(0, u_i − hi_i)
//! ```
//!
//! Outputs are compared in the surrogate's standardized space (targets are
//! standardized with the same statistics) and bound penalties are measured
//! in unit-scaled input coordinates, so `α = 1` means the same thing for
//! every input regardless of its physical range.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::qmc::BoundsSpec;
use crate::surrogate::{Standardizer, Surrogate};

/// Default targets for the flare simulator: sink rate (ft/s), horizontal
/// velocity (knots), downrange (ft).
pub const FLARE_TARGETS: [f64; 3] = [2.0, 54.0, 400.0];
/// Sink rate doubled, downrange cut tenfold.
pub const FLARE_WEIGHTS: [f64; 3] = [2.0, 1.0, 0.1];
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub bounds: BoundsSpec,
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

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl ObjectiveSpec {
    pub fn new(targets: Vec<f64>, weights: Vec<f64>, alpha: f64, bounds: BoundsSpec) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("objective targets"));
        }
        if targets.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                context: "objective weights",
                expected: targets.len(),
                actual: weights.len(),
            });
        }
        if !all_finite(&targets) {
            return Err(Error::NonFinite("objective targets"));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidConfig("objective weights must be positive".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidConfig("alpha must be non-negative".into()));
        }
        Ok(ObjectiveSpec {
            targets,
            weights,
            alpha,
            bounds,
        })
    }

    /// Flare targets and weights over the given input box.
    pub fn flare(bounds: BoundsSpec) -> Self {
        ObjectiveSpec {
            targets: FLARE_TARGETS.to_vec(),
            weights: FLARE_WEIGHTS.to_vec(),
            alpha: DEFAULT_ALPHA,
            bounds,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.targets.len()
    }

    pub fn input_dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn standardized_targets(&self, standardizer: &Standardizer) -> Vec<f64> {
        standardizer.standardize_output(&self.targets)
    }

    /// `α Σ` of unit-space bound violations.
    pub fn penalty(&self, x: &[f64]) -> f64 {
        let b = &self.bounds;
        let total: f64 = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let r = b.range(i);
                (b.x_min()[i] - v).max(0.0) / r + (v - b.x_max()[i]).max(0.0) / r
            })
            .sum();
        self.alpha * total
    }

    fn weighted_mae(&self, target_std: &[f64], y_std: &[f64]) -> f64 {
        let n = self.output_dim() as f64;
        self.weights
            .iter()
            .zip(target_std)
            .zip(y_std)
            .map(|((w, t), y)| w * (t - y).abs())
            .sum::<f64>()
            / n
    }

    fn check_shapes(&self, target_std: &[f64], y_std: &[f64], x: &[f64]) -> Result<()> {
        let n = self.output_dim();
        for (context, len, expected) in [
            ("objective target", target_std.len(), n),
            ("objective output", y_std.len(), n),
            ("objective input", x.len(), self.input_dim()),
        ] {
            if len != expected {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    actual: len,
                });
            }
        }
        Ok(())
    }

    /// Loss of a standardized output vector against standardized targets,
    /// at physical input `x`.
    pub fn loss(&self, target_std: &[f64], y_std: &[f64], x: &[f64]) -> Result<f64> {
        self.check_shapes(target_std, y_std, x)?;
        if !(all_finite(target_std) && all_finite(y_std) && all_finite(x)) {
            return Err(Error::NonFinite("objective arguments"));
        }
        Ok(self.weighted_mae(target_std, y_std) + self.penalty(x))
    }

    /// Scores a physical output vector (e.g. a true simulator return).
    pub fn loss_physical(&self, standardizer: &Standardizer, y: &[f64], x: &[f64]) -> Result<f64> {
        if !all_finite(y) {
            return Err(Error::NonFinite("simulator output"));
        }
        self.loss(
            &self.standardized_targets(standardizer),
            &standardizer.standardize_output(y),
            x,
        )
    }

    /// Surrogate loss at physical input `x` and its gradient with respect to
    /// the model's standardized input coordinates.
    ///
    /// The MAE kink uses `sign(0) = 0`. Below a lower bound the penalty adds
    /// `-α` per unit-space coordinate (`+α` above an upper bound), carried
    /// into standardized coordinates by the factor `σ_i / range_i`.
    pub fn loss_and_gradient<M: Surrogate + ?Sized>(&self, model: &M, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        if x.len() != self.input_dim() || x.len() != model.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "objective input",
                expected: model.input_dim(),
                actual: x.len(),
            });
        }
        if !all_finite(x) {
            return Err(Error::NonFinite("objective input"));
        }
        let target_std = self.standardized_targets(model.standardizer());
        let x_std = model.standardizer().standardize_input(x);
        self.loss_and_gradient_std(model, &target_std, &x_std)
    }

    /// As [`Self::loss_and_gradient`] but starting from standardized input
    /// and precomputed standardized targets.
    pub fn loss_and_gradient_std<M: Surrogate + ?Sized>(
        &self,
        model: &M,
        target_std: &[f64],
        x_std: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.output_dim();
        if model.output_dim() != n || target_std.len() != n {
            return Err(Error::DimensionMismatch {
                context: "objective outputs vs model",
                expected: n,
                actual: model.output_dim(),
            });
        }
        let weights = &self.weights;
        let mut cotangent = |y: &[f64]| -> Vec<f64> {
            y.iter()
                .zip(target_std)
                .zip(weights)
                .map(|((y, t), w)| w / n as f64 * sign(y - t))
                .collect()
        };
        let (y_std, mut grad) = model.pullback_std(x_std, &mut cotangent)?;
        let standardizer = model.standardizer();
        let x = standardizer.destandardize_input(x_std);
        let loss = self.loss(target_std, &y_std, &x)?;
        let b = &self.bounds;
        for (i, g) in grad.iter_mut().enumerate() {
            let chain = standardizer.input_std()[i] / b.range(i);
            if x[i] < b.x_min()[i] {
                *g -= self.alpha * chain;
            } else if x[i] > b.x_max()[i] {
                *g += self.alpha * chain;
            }
        }
        if !(loss.is_finite() && all_finite(&grad)) {
            return Err(Error::NonFinite("objective gradient"));
        }
        Ok((loss, grad))
    }
}
