use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::{Dataset, Provenance};
use crate::driver::{collect_initial, run_from, DriverConfig, StoppingSpec};
use crate::error::{Error, Result};
use crate::objective::ObjectiveSpec;
use crate::par;
use crate::qmc::SobolSequence;
use crate::simbench::Simulator;
use crate::surrogate::Standardizer;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BaselineConfig {
    /// True-simulator queries per strategy per trial, initial data excluded.
    pub budget: usize,
    pub trials: usize,
    /// Loss both strategies race to; defaults to the mean quasi-random
    /// curve's final value.
    pub reference_loss: Option<f64>,
    /// Template for the intelligent runs. Trial `t` uses seed `driver.seed + t`;
    /// the stopping rules are replaced by a plain `budget`-query limit.
    pub driver: DriverConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            budget: 30,
            trials: 5,
            reference_loss: None,
            driver: DriverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialFailure {
    pub trial: usize,
    pub strategy: String,
    pub error: String,
}

/// Best-so-far true loss after each of `budget` queries, per strategy.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaselineComparison {
    pub budget: usize,
    pub trials: usize,
    pub initial_samples: usize,
    pub best_initial_loss: f64,
    /// Trials that completed for both strategies; only these are averaged.
    pub completed_trials: Vec<usize>,
    pub intelligent_curves: Vec<Vec<f64>>,
    pub random_curves: Vec<Vec<f64>>,
    pub mean_intelligent: Vec<f64>,
    pub mean_random: Vec<f64>,
    pub reference_loss: f64,
    /// 1-based query index where the mean curve first reaches the reference.
    pub intelligent_queries_to_reference: Option<usize>,
    pub random_queries_to_reference: Option<usize>,
    /// `random_queries_to_reference / intelligent_queries_to_reference`.
    pub speedup_factor: Option<f64>,
    pub failures: Vec<TrialFailure>,
}

/// Every record queried while building a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecords {
    pub initial: Dataset,
    /// Intelligent-query records of each trial (empty for failed trials).
    pub intelligent: Vec<Dataset>,
    pub random: Vec<Dataset>,
}

fn envelope(losses: impl IntoIterator<Item = Option<f64>>) -> Vec<f64> {
    let mut best = f64::INFINITY;
    losses
        .into_iter()
        .map(|l| {
            if let Some(l) = l {
                best = best.min(l);
            }
            best
        })
        .collect()
}

fn mean_curve(curves: &[&Vec<f64>], len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| curves.iter().map(|c| c[i]).sum::<f64>() / curves.len() as f64)
        .collect()
}

fn first_reaching(curve: &[f64], reference: f64) -> Option<usize> {
    curve.iter().position(|&v| v <= reference).map(|i| i + 1)
}

struct Trial {
    intelligent: Result<(Vec<f64>, Dataset)>,
    random: Result<(Vec<f64>, Dataset)>,
}

/// Surrogate-guided search versus quasi-random search at equal query budgets.
///
/// Both strategies share one initial Sobol dataset, which also fits the
/// standardizer that scores every query. Quasi-random trial `t` takes
/// `budget` Sobol points starting after the initial design at offset
/// `initial_samples + t * budget`, so trials never reuse points.
pub fn mc_baseline(
    sim: &dyn Simulator,
    spec: &ObjectiveSpec,
    config: &BaselineConfig,
) -> Result<(BaselineComparison, BaselineRecords)> {
    if config.budget == 0 || config.trials == 0 {
        return Err(Error::InvalidConfig(
            "baseline budget and trials must be positive".into(),
        ));
    }
    config.driver.validate()?;
    let m = sim.input_dim();
    let initial_samples = config.driver.initial_samples;
    let (initial, _) = collect_initial(sim, initial_samples, &mut SobolSequence::new(m)?)?;
    let scoring = Standardizer::fit(&initial)?;
    let best_initial_loss = (0..initial.len())
        .map(|i| {
            let (x, y, _) = initial.record(i);
            spec.loss_physical(&scoring, y, x)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    let trials: Vec<Trial> = par::map_indexed(config.trials, |t| Trial {
        intelligent: intelligent_trial(sim, spec, config, &initial, t),
        random: random_trial(sim, spec, config, &scoring, t),
    });

    let mut failures = Vec::new();
    let mut completed_trials = Vec::new();
    let mut intelligent_curves = Vec::new();
    let mut random_curves = Vec::new();
    let mut records = BaselineRecords {
        initial: initial.clone(),
        intelligent: Vec::new(),
        random: Vec::new(),
    };
    for (t, trial) in trials.into_iter().enumerate() {
        let mut fail = |strategy: &str, err: &Error| {
            log::warn!("baseline trial {t} ({strategy}) failed: {err}");
            failures.push(TrialFailure {
                trial: t,
                strategy: strategy.to_string(),
                error: err.to_string(),
            });
        };
        let (ic, id) = match trial.intelligent {
            Ok(v) => (Some(v.0), v.1),
            Err(err) => {
                fail("intelligent", &err);
                (None, Dataset::new(m, sim.output_dim()))
            }
        };
        let (rc, rd) = match trial.random {
            Ok(v) => (Some(v.0), v.1),
            Err(err) => {
                fail("quasi-random", &err);
                (None, Dataset::new(m, sim.output_dim()))
            }
        };
        records.intelligent.push(id);
        records.random.push(rd);
        intelligent_curves.push(ic.clone().unwrap_or_default());
        random_curves.push(rc.clone().unwrap_or_default());
        if ic.is_some() && rc.is_some() {
            completed_trials.push(t);
        }
    }
    if completed_trials.is_empty() {
        return Err(Error::Simulator("every baseline trial failed".into()));
    }

    let pick = |curves: &[Vec<f64>]| -> Vec<f64> {
        let chosen: Vec<&Vec<f64>> = completed_trials.iter().map(|&t| &curves[t]).collect();
        mean_curve(&chosen, config.budget)
    };
    let mean_intelligent = pick(&intelligent_curves);
    let mean_random = pick(&random_curves);
    let reference_loss = config.reference_loss.unwrap_or(mean_random[config.budget - 1]);
    let intelligent_queries_to_reference = first_reaching(&mean_intelligent, reference_loss);
    let random_queries_to_reference = first_reaching(&mean_random, reference_loss);
    let speedup_factor = match (random_queries_to_reference, intelligent_queries_to_reference) {
        (Some(r), Some(i)) => Some(r as f64 / i as f64),
        _ => None,
    };

    Ok((
        BaselineComparison {
            budget: config.budget,
            trials: config.trials,
            initial_samples: initial.len(),
            best_initial_loss,
            completed_trials,
            intelligent_curves,
            random_curves,
            mean_intelligent,
            mean_random,
            reference_loss,
            intelligent_queries_to_reference,
            random_queries_to_reference,
            speedup_factor,
            failures,
        },
        records,
    ))
}

fn intelligent_trial(
    sim: &dyn Simulator,
    spec: &ObjectiveSpec,
    config: &BaselineConfig,
    initial: &Dataset,
    t: usize,
) -> Result<(Vec<f64>, Dataset)> {
    let driver = DriverConfig {
        seed: config.driver.seed.wrapping_add(t as u64),
        stopping: StoppingSpec {
            goal_loss: None,
            convergence_epsilon: 0.0,
            max_iterations: config.budget,
            ..config.driver.stopping.clone()
        },
        ..config.driver.clone()
    };
    let outcome = run_from(sim, spec, &driver, initial.clone(), &mut |_| {})?;
    let curve = envelope(outcome.log.records.iter().map(|r| r.true_loss));
    let queried: Vec<usize> = (initial.len()..outcome.dataset.len()).collect();
    Ok((curve, outcome.dataset.subset(&queried)))
}

fn random_trial(
    sim: &dyn Simulator,
    spec: &ObjectiveSpec,
    config: &BaselineConfig,
    scoring: &Standardizer,
    t: usize,
) -> Result<(Vec<f64>, Dataset)> {
    let offset = (config.driver.initial_samples + t * config.budget) as u64;
    let points = SobolSequence::with_offset(sim.input_dim(), offset)?.sample_batch(config.budget, sim.bounds())?;
    let mut data = Dataset::new(sim.input_dim(), sim.output_dim());
    let mut losses = Vec::with_capacity(points.len());
    for x in points {
        match sim
            .evaluate(&x)
            .and_then(|y| spec.loss_physical(scoring, &y, &x).map(|l| (y, l)))
        {
            Ok((y, loss)) => {
                data.push(x, y, Provenance::Baseline)?;
                losses.push(Some(loss));
            }
            Err(err) => {
                log::warn!("quasi-random query failed: {err}");
                losses.push(None);
            }
        }
    }
    Ok((envelope(losses), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inputopt::MultiStartConfig;
    use crate::simbench::benchmark_sim;
    use crate::surrogate::TrainConfig;
    use alloc::vec;

    #[test]
    fn envelope_is_running_minimum() {
        assert_eq!(
            envelope([Some(3.0), None, Some(4.0), Some(1.0)]),
            vec![3.0, 3.0, 3.0, 1.0]
        );
        assert_eq!(first_reaching(&[3.0, 2.0, 1.0], 2.0), Some(2));
        assert_eq!(first_reaching(&[3.0], 2.0), None);
    }

    fn tiny(budget: usize) -> BaselineConfig {
        BaselineConfig {
            budget,
            trials: 2,
            reference_loss: None,
            driver: DriverConfig {
                initial_samples: 30,
                train: TrainConfig {
                    hidden_layers: vec![8],
                    max_epochs: 20,
                    ..TrainConfig::default()
                },
                multistart: MultiStartConfig {
                    num_starts: 3,
                    num_steps: 10,
                    ..MultiStartConfig::default()
                },
                ..DriverConfig::default()
            },
        }
    }

    #[test]
    fn budget_one_gives_single_point_curves_and_equal_budgets() {
        let sim = benchmark_sim("sphere", 2).unwrap();
        let spec = ObjectiveSpec::new(vec![0.5, 1.0, 1.5], vec![1.0; 3], 1.0, sim.bounds().clone()).unwrap();
        let (cmp, records) = mc_baseline(sim.as_ref(), &spec, &tiny(1)).unwrap();
        assert_eq!(cmp.mean_intelligent.len(), 1);
        assert_eq!(cmp.mean_random.len(), 1);
        assert!(cmp.intelligent_curves.iter().all(|c| c.len() == 1));
        assert_eq!(sim.query_count(), 30 + 2 * 2);
        assert!(records.intelligent.iter().all(|d| d.len() == 1));
        assert!(records.random.iter().all(|d| d.len() == 1));
        assert_eq!(cmp.random_queries_to_reference, Some(1));
    }

    #[test]
    fn reruns_are_identical() {
        let run = || {
            let sim = benchmark_sim("rosenbrock-3out", 3).unwrap();
            let spec = ObjectiveSpec::new(vec![1.0, 0.5, 0.5], vec![1.0; 3], 1.0, sim.bounds().clone()).unwrap();
            mc_baseline(sim.as_ref(), &spec, &tiny(4)).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        for c in a.0.intelligent_curves.iter().chain(&a.0.random_curves) {
            assert!(c.windows(2).all(|w| w[1] <= w[0]));
        }
        assert_ne!(a.1.random[0], a.1.random[1]);
    }
}
