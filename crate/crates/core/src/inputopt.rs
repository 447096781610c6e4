//! Multi-start momentum descent of the objective over surrogate inputs.
//!
//! Starts are Sobol points spread over the objective's bounds. Each start
//! runs `v <- momentum * v - lr * grad`, `x <- x + v` in the surrogate's
//! standardized input space and remembers the best point it visited. The
//! best point of each start is clamped into the box and re-scored; the
//! overall winner is the lowest such score (earliest start on ties).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::par;
use crate::qmc::SobolSequence;
use crate::surrogate::Surrogate;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MultiStartConfig {
    pub num_starts: usize,
    pub num_steps: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub record_paths: bool,
}

impl Default for MultiStartConfig {
    fn default() -> Self {
        MultiStartConfig {
            num_starts: 100,
            num_steps: 500,
            learning_rate: 0.01,
            momentum: 0.9,
            record_paths: false,
        }
    }
}

impl MultiStartConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_starts == 0 || self.num_steps == 0 {
            return Err(Error::InvalidConfig("num_starts and num_steps must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One recorded iterate, physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPoint {
    pub step: usize,
    pub loss: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    /// Best visited point of this start, clamped into bounds.
    pub x: Vec<f64>,
    /// Surrogate loss at `x`.
    pub loss: f64,
    /// Set when a non-finite loss or gradient stopped this start early.
    pub frozen: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    pub best_start: usize,
    pub all_finals: Vec<StartOutcome>,
    /// Per-start iterates when `record_paths` is set.
    pub paths: Option<Vec<Vec<PathPoint>>>,
}

fn descend<M: Surrogate + ?Sized>(
    model: &M,
    spec: &ObjectiveSpec,
    target_std: &[f64],
    start: &[f64],
    config: &MultiStartConfig,
) -> (StartOutcome, Vec<PathPoint>) {
    let standardizer = model.standardizer();
    let mut x = standardizer.standardize_input(start);
    let mut velocity = vec![0.0; x.len()];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut frozen = false;
    let mut path = Vec::new();

    for step in 0..=config.num_steps {
        let (loss, grad) = match spec.loss_and_gradient_std(model, target_std, &x) {
            Ok(v) => v,
            Err(_) => {
                frozen = true;
                break;
            }
        };
        if config.record_paths {
            path.push(PathPoint {
                step,
                loss,
                x: standardizer.destandardize_input(&x),
            });
        }
        if best.as_ref().is_none_or(|(b, _)| loss < *b) {
            best = Some((loss, x.clone()));
        }
        if step == config.num_steps {
            break;
        }
        for ((v, xi), g) in velocity.iter_mut().zip(x.iter_mut()).zip(&grad) {
            *v = config.momentum * *v - config.learning_rate * g;
            *xi += *v;
        }
        if !x.iter().all(|v| v.is_finite()) {
            frozen = true;
            break;
        }
    }

    let best_std = best
        .map(|(_, x)| x)
        .unwrap_or_else(|| standardizer.standardize_input(start));
    let clamped = spec.bounds.clamp(&standardizer.destandardize_input(&best_std));
    let loss = model
        .forward_std(&standardizer.standardize_input(&clamped))
        .and_then(|y| spec.loss(target_std, &y, &clamped))
        .unwrap_or(f64::NAN);
    (
        StartOutcome {
            x: clamped,
            loss,
            frozen,
        },
        path,
    )
}

/// Runs `config.num_starts` descents from the next Sobol points of `seq`.
pub fn optimize_inputs<M: Surrogate + Sync + ?Sized>(
    model: &M,
    spec: &ObjectiveSpec,
    config: &MultiStartConfig,
    seq: &mut SobolSequence,
) -> Result<OptResult> {
    config.validate()?;
    if model.input_dim() != spec.input_dim() || model.output_dim() != spec.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "optimize_inputs model vs objective",
            expected: spec.input_dim(),
            actual: model.input_dim(),
        });
    }
    let starts = seq.sample_batch(config.num_starts, &spec.bounds)?;
    let target_std = spec.standardized_targets(model.standardizer());
    let results = par::map_indexed(starts.len(), |i| descend(model, spec, &target_std, &starts[i], config));

    let mut all_finals = Vec::with_capacity(results.len());
    let mut paths = config.record_paths.then(Vec::new);
    for (outcome, path) in results {
        all_finals.push(outcome);
        if let Some(p) = paths.as_mut() {
            p.push(path);
        }
    }
    let best_start = all_finals
        .iter()
        .enumerate()
        .filter(|(_, o)| o.loss.is_finite())
        .min_by(|a, b| a.1.loss.total_cmp(&b.1.loss).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or(Error::NonFinite("every multi-start loss"))?;
    for (i, o) in all_finals.iter().enumerate() {
        if o.frozen {
            log::warn!("multi-start {i} froze on a non-finite value");
        }
    }
    Ok(OptResult {
        best_x: all_finals[best_start].x.clone(),
        best_loss: all_finals[best_start].loss,
        best_start,
        all_finals,
        paths,
    })
}

/// `loss_and_gradient` for every input, in order; errors stay per element.
pub fn batched_gradients<M: Surrogate + Sync + ?Sized>(
    model: &M,
    spec: &ObjectiveSpec,
    xs: &[Vec<f64>],
) -> Vec<Result<(f64, Vec<f64>)>> {
    par::map_indexed(xs.len(), |i| spec.loss_and_gradient(model, &xs[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmc::BoundsSpec;
    use crate::surrogate::{Standardizer, SurrogateModel};

    /// ŷ_k = Σ_i (x_i − c_i)² on every output, identity standardization.
    struct Quadratic {
        center: Vec<f64>,
        outputs: usize,
        standardizer: Standardizer,
    }

    impl Quadratic {
        fn new(center: Vec<f64>, outputs: usize) -> Self {
            let m = center.len();
            Quadratic {
                center,
                outputs,
                standardizer: Standardizer::identity(m, outputs),
            }
        }
    }

    impl Surrogate for Quadratic {
        fn input_dim(&self) -> usize {
            self.center.len()
        }
        fn output_dim(&self) -> usize {
            self.outputs
        }
        fn standardizer(&self) -> &Standardizer {
            &self.standardizer
        }
        fn forward_std(&self, x: &[f64]) -> Result<Vec<f64>> {
            let v: f64 = x.iter().zip(&self.center).map(|(x, c)| (x - c) * (x - c)).sum();
            Ok(vec![v; self.outputs])
        }
        fn pullback_std(
            &self,
            x: &[f64],
            cotangent: &mut dyn FnMut(&[f64]) -> Vec<f64>,
        ) -> Result<(Vec<f64>, Vec<f64>)> {
            let y = self.forward_std(x)?;
            let total: f64 = cotangent(&y).iter().sum();
            let grad = x.iter().zip(&self.center).map(|(x, c)| 2.0 * (x - c) * total).collect();
            Ok((y, grad))
        }
    }

    #[test]
    fn quadratic_stub_converges_to_center() {
        let center = vec![0.3, 0.7, 0.55];
        let model = Quadratic::new(center.clone(), 1);
        let spec = ObjectiveSpec::new(vec![0.0], vec![1.0], 1.0, BoundsSpec::unit(3)).unwrap();
        let config = MultiStartConfig {
            num_starts: 8,
            ..Default::default()
        };
        let mut seq = SobolSequence::new(3).unwrap();
        let res = optimize_inputs(&model, &spec, &config, &mut seq).unwrap();
        for (x, c) in res.best_x.iter().zip(&center) {
            assert!((x - c).abs() < 1e-3, "{:?}", res.best_x);
        }
        assert_eq!(seq.index(), 9);
    }

    #[test]
    fn constant_surrogate_stays_at_start() {
        let model = SurrogateModel::from_parameters(
            &[2, 1],
            vec![vec![0.0; 2]],
            vec![vec![0.4]],
            Standardizer::identity(2, 1),
            0,
        )
        .unwrap();
        let spec = ObjectiveSpec::new(vec![0.0], vec![1.0], 1.0, BoundsSpec::unit(2)).unwrap();
        let config = MultiStartConfig {
            num_starts: 1,
            ..Default::default()
        };
        let res = optimize_inputs(&model, &spec, &config, &mut SobolSequence::new(2).unwrap()).unwrap();
        assert_eq!(res.best_x, vec![0.5, 0.5]);
        assert_eq!(res.best_loss, 0.4);
    }

    #[test]
    fn best_is_min_over_finals_with_earliest_tie() {
        let model = SurrogateModel::from_parameters(
            &[2, 1],
            vec![vec![0.0; 2]],
            vec![vec![0.4]],
            Standardizer::identity(2, 1),
            0,
        )
        .unwrap();
        let spec = ObjectiveSpec::new(vec![0.0], vec![1.0], 1.0, BoundsSpec::unit(2)).unwrap();
        let config = MultiStartConfig {
            num_starts: 5,
            num_steps: 3,
            ..Default::default()
        };
        let res = optimize_inputs(&model, &spec, &config, &mut SobolSequence::new(2).unwrap()).unwrap();
        assert_eq!(res.best_start, 0);
        assert_eq!(res.all_finals.len(), 5);
    }

    #[test]
    fn paths_have_monotone_envelope() {
        let model = Quadratic::new(vec![0.2, 0.9], 2);
        let spec = ObjectiveSpec::new(vec![0.0, 0.0], vec![1.0, 2.0], 1.0, BoundsSpec::unit(2)).unwrap();
        let config = MultiStartConfig {
            num_starts: 4,
            num_steps: 50,
            record_paths: true,
            ..Default::default()
        };
        let res = optimize_inputs(&model, &spec, &config, &mut SobolSequence::new(2).unwrap()).unwrap();
        let paths = res.paths.unwrap();
        assert_eq!(paths.len(), 4);
        for (path, fin) in paths.iter().zip(&res.all_finals) {
            assert_eq!(path.len(), 51);
            let mut env = f64::INFINITY;
            let mut prev = f64::INFINITY;
            for p in path {
                env = env.min(p.loss);
                assert!(env <= prev);
                prev = env;
            }
            assert!(fin.loss <= env + 1e-12);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let model = Quadratic::new(vec![0.5], 1);
        let spec = ObjectiveSpec::new(vec![0.0], vec![1.0], 1.0, BoundsSpec::unit(1)).unwrap();
        let mut seq = SobolSequence::new(1).unwrap();
        for config in [
            MultiStartConfig {
                num_starts: 0,
                ..Default::default()
            },
            MultiStartConfig {
                momentum: 1.0,
                ..Default::default()
            },
            MultiStartConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
        ] {
            assert!(optimize_inputs(&model, &spec, &config, &mut seq).is_err());
        }
        let wrong = ObjectiveSpec::new(vec![0.0], vec![1.0], 1.0, BoundsSpec::unit(2)).unwrap();
        assert!(optimize_inputs(&model, &wrong, &MultiStartConfig::default(), &mut seq).is_err());
    }

    #[test]
    fn batched_matches_single_and_is_order_free() {
        let model = Quadratic::new(vec![0.2, 0.9], 2);
        let spec = ObjectiveSpec::new(vec![0.1, -0.3], vec![1.0, 2.0], 1.0, BoundsSpec::unit(2)).unwrap();
        let xs = vec![vec![0.1, 0.2], vec![1.3, 0.4], vec![0.5, -0.2]];
        let batch = batched_gradients(&model, &spec, &xs);
        for (x, r) in xs.iter().zip(&batch) {
            assert_eq!(r, &spec.loss_and_gradient(&model, x));
        }
        let reversed: Vec<Vec<f64>> = xs.iter().rev().cloned().collect();
        let rb = batched_gradients(&model, &spec, &reversed);
        for (a, b) in batch.iter().zip(rb.iter().rev()) {
            assert_eq!(a, b);
        }
        let single = batched_gradients(&model, &spec, &xs[..1]);
        assert_eq!(single[0], spec.loss_and_gradient(&model, &xs[0]));
    }
}
