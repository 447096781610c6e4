//! The outer loop: initial Sobol design, then repeated train → optimize →
//! single true query until a stopping rule fires.
//!
//! True losses are scored with a standardizer fitted once on the initial
//! dataset, so they are comparable across iterations. Each iteration's
//! surrogate still fits its own standardizer on its training split.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::inputopt::{optimize_inputs, MultiStartConfig};
use crate::objective::ObjectiveSpec;
use crate::qmc::SobolSequence;
use crate::rng;
use crate::simbench::Simulator;
use crate::surrogate::{train, Standardizer, SurrogateModel, TrainConfig, TrainReport};

/// Consecutive failed intelligent queries tolerated before aborting.
pub const MAX_CONSECUTIVE_FAILURES: usize = 3;

const TAG_TRAIN: u64 = 0xD21_7E4;
const TAG_MULTISTART: u64 = 0xD21_5B0;
/// Multi-start offsets are drawn below this.
const MULTISTART_OFFSET_SPAN: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct StoppingSpec {
    /// `None` disables the goal criterion.
    pub goal_loss: Option<f64>,
    pub convergence_window: usize,
    /// Zero disables the convergence criterion.
    pub convergence_epsilon: f64,
    pub max_iterations: usize,
}

impl Default for StoppingSpec {
    fn default() -> Self {
        StoppingSpec {
            goal_loss: None,
            convergence_window: 5,
            convergence_epsilon: 1e-3,
            max_iterations: 50,
        }
    }
}

impl StoppingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.convergence_window == 0 {
            return Err(Error::InvalidConfig("convergence_window must be positive".into()));
        }
        if !(self.convergence_epsilon >= 0.0 && self.convergence_epsilon.is_finite()) {
            return Err(Error::InvalidConfig("convergence_epsilon must be non-negative".into()));
        }
        if self.goal_loss.is_some_and(|g| !g.is_finite()) {
            return Err(Error::InvalidConfig("goal_loss must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum StopReason {
    Goal,
    Converged,
    MaxIterations,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Goal => "goal",
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max-iterations",
        }
    }
}

impl core::fmt::Display for StopReason {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Applies the stopping rules to the true losses of the intelligent queries
/// so far, in iteration order.
///
/// * goal: the last loss is at or below `goal_loss`;
/// * converged: with `K = convergence_window`, there are more than `K`
///   losses and the best of all but the last `K` beats the best of the last
///   `K` by less than `convergence_epsilon`;
/// * max iterations: `history.len() >= max_iterations`.
///
/// Earlier rules win.
pub fn check_stopping(history: &[f64], spec: &StoppingSpec) -> Option<StopReason> {
    if let (Some(goal), Some(&last)) = (spec.goal_loss, history.last()) {
        if last <= goal {
            return Some(StopReason::Goal);
        }
    }
    let k = spec.convergence_window;
    if spec.convergence_epsilon > 0.0 && k > 0 && history.len() > k {
        let (head, tail) = history.split_at(history.len() - k);
        let best = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        if best(head) - best(tail) < spec.convergence_epsilon {
            return Some(StopReason::Converged);
        }
    }
    if history.len() >= spec.max_iterations {
        return Some(StopReason::MaxIterations);
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct DriverConfig {
    pub initial_samples: usize,
    pub train: TrainConfig,
    pub multistart: MultiStartConfig,
    pub stopping: StoppingSpec,
    pub seed: u64,
}

impl Default for DriverConfig {
    fn default() -> Self {
        DriverConfig {
            initial_samples: 400,
            train: TrainConfig::default(),
            multistart: MultiStartConfig::default(),
            stopping: StoppingSpec::default(),
            seed: 0,
        }
    }
}

impl DriverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_samples == 0 {
            return Err(Error::InvalidConfig("initial_samples must be positive".into()));
        }
        self.train.validate()?;
        self.multistart.validate()?;
        self.stopping.validate()
    }
}

/// An initial design point the simulator refused.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FailedQuery {
    pub x: Vec<f64>,
    pub error: String,
}

/// Queries `sim` at the next `count` points of `seq`, scaled to the
/// simulator's bounds. Failed points are skipped and returned separately;
/// more than 10% failures is an error.
pub fn collect_initial(
    sim: &dyn Simulator,
    count: usize,
    seq: &mut SobolSequence,
) -> Result<(Dataset, Vec<FailedQuery>)> {
    if count == 0 {
        return Err(Error::InvalidConfig("initial sample count must be positive".into()));
    }
    let points = seq.sample_batch(count, sim.bounds())?;
    let mut data = Dataset::new(sim.input_dim(), sim.output_dim());
    let mut failed = Vec::new();
    for x in points {
        match sim.evaluate(&x).and_then(|y| checked_output(sim, y)) {
            Ok(y) => data.push(x, y, Provenance::InitialSobol)?,
            Err(err) => {
                log::warn!("initial query at {x:?} failed: {err}");
                failed.push(FailedQuery {
                    x,
                    error: err.to_string(),
                });
            }
        }
    }
    if failed.len() * 10 > count {
        return Err(Error::TooManyFailures {
            failed: failed.len(),
            attempted: count,
        });
    }
    Ok((data, failed))
}

fn checked_output(sim: &dyn Simulator, y: Vec<f64>) -> Result<Vec<f64>> {
    if y.len() != sim.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "simulator output",
            expected: sim.output_dim(),
            actual: y.len(),
        });
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("simulator output"));
    }
    Ok(y)
}

/// Condensed [`TrainReport`] for the run log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub initial_validation_loss: f64,
    pub best_validation_loss: f64,
    pub stopped_early: bool,
}

impl TrainSummary {
    fn new(seed: u64, report: &TrainReport) -> Self {
        TrainSummary {
            seed,
            epochs_run: report.epochs.len(),
            best_epoch: report.best_epoch,
            initial_validation_loss: report.initial_validation_loss(),
            best_validation_loss: report.best_validation_loss(),
            stopped_early: report.stopped_early,
        }
    }
}

/// One pass of the loop. `y_best`/`true_loss` are absent when the query failed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub iteration: usize,
    pub x_best: Vec<f64>,
    pub y_best: Option<Vec<f64>>,
    pub true_loss: Option<f64>,
    pub surrogate_loss_at_x_best: f64,
    /// Lowest true loss over every record so far, initial data included.
    pub best_so_far: f64,
    pub train: TrainSummary,
    pub failure: Option<String>,
    pub stop_reason: Option<StopReason>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunLog {
    pub seed: u64,
    pub config: DriverConfig,
    pub initial_dataset_size: usize,
    pub best_initial_loss: f64,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub x_best: Vec<f64>,
    pub y_best: Vec<f64>,
    pub best_loss: f64,
    /// Index of the winning record in `dataset`.
    pub best_index: usize,
    pub stop_reason: StopReason,
    /// Intelligent queries sent, failed ones included.
    pub intelligent_queries: usize,
    pub initial_queries: usize,
    pub log: RunLog,
    pub dataset: Dataset,
    /// Scores every true loss in the log.
    pub scoring: Standardizer,
    /// Surrogate of the last completed iteration.
    pub model: Option<SurrogateModel>,
}

impl RunOutcome {
    pub fn total_queries(&self) -> usize {
        self.initial_queries + self.intelligent_queries
    }

    /// Successful intelligent queries, i.e. loop iterations that grew the dataset.
    pub fn iterations(&self) -> usize {
        self.log.records.iter().filter(|r| r.true_loss.is_some()).count()
    }
}

/// Full loop: collects `config.initial_samples` Sobol points from the start
/// of the sequence, then iterates.
pub fn run(sim: &dyn Simulator, spec: &ObjectiveSpec, config: &DriverConfig) -> Result<RunOutcome> {
    config.validate()?;
    let mut seq = SobolSequence::new(sim.input_dim())?;
    let (initial, _) = collect_initial(sim, config.initial_samples, &mut seq)?;
    run_from(sim, spec, config, initial, &mut |_| {})
}

/// Loop on an existing initial dataset; `observe` sees each iteration record
/// as soon as it is complete.
pub fn run_from(
    sim: &dyn Simulator,
    spec: &ObjectiveSpec,
    config: &DriverConfig,
    initial: Dataset,
    observe: &mut dyn FnMut(&IterationRecord),
) -> Result<RunOutcome> {
    config.validate()?;
    if sim.input_dim() != spec.input_dim() || initial.input_dim() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            context: "driver input dimension",
            expected: spec.input_dim(),
            actual: sim.input_dim(),
        });
    }
    if sim.output_dim() != spec.output_dim() || initial.output_dim() != spec.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "driver output dimension",
            expected: spec.output_dim(),
            actual: sim.output_dim(),
        });
    }
    if initial.is_empty() {
        return Err(Error::Empty("initial dataset"));
    }
    initial.check_finite()?;

    let scoring = Standardizer::fit(&initial)?;
    let score = |x: &[f64], y: &[f64]| spec.loss_physical(&scoring, y, x);
    let mut best = (f64::INFINITY, usize::MAX);
    for i in 0..initial.len() {
        let (x, y, _) = initial.record(i);
        let loss = score(x, y)?;
        if loss < best.0 {
            best = (loss, i);
        }
    }
    let best_initial_loss = best.0;
    let initial_queries = initial.len();

    let offset = rng::derive_seed(config.seed, TAG_MULTISTART, 0) % MULTISTART_OFFSET_SPAN;
    // Every iteration descends from the same Sobol starts.
    let starts = SobolSequence::with_offset(spec.input_dim(), offset)?;
    let mut dataset = initial;
    let mut history = Vec::new();
    let mut records = Vec::new();
    let mut model = None;
    let mut attempts = 0u64;
    let mut consecutive_failures = 0;
    let mut intelligent_queries = 0;

    let mut stop = check_stopping(&history, &config.stopping);
    while stop.is_none() {
        let train_seed = rng::derive_seed(config.seed, TAG_TRAIN, attempts);
        attempts += 1;
        let train_config = TrainConfig {
            seed: train_seed,
            ..config.train.clone()
        };
        let (surrogate, report) = train(&dataset, &train_config)?;
        let opt = optimize_inputs(&surrogate, spec, &config.multistart, &mut starts.clone())?;
        let iteration = records.len() + 1;
        intelligent_queries += 1;
        let queried = sim.evaluate(&opt.best_x).and_then(|y| checked_output(sim, y));
        let mut record = IterationRecord {
            iteration,
            x_best: opt.best_x.clone(),
            y_best: None,
            true_loss: None,
            surrogate_loss_at_x_best: opt.best_loss,
            best_so_far: best.0,
            train: TrainSummary::new(train_seed, &report),
            failure: None,
            stop_reason: None,
        };
        match queried {
            Ok(y) => {
                consecutive_failures = 0;
                let loss = score(&opt.best_x, &y)?;
                dataset.push(opt.best_x, y.clone(), Provenance::IntelligentQuery)?;
                if loss < best.0 {
                    best = (loss, dataset.len() - 1);
                }
                history.push(loss);
                record.y_best = Some(y);
                record.true_loss = Some(loss);
                record.best_so_far = best.0;
                model = Some(surrogate);
                stop = check_stopping(&history, &config.stopping);
                record.stop_reason = stop;
                log::info!("iteration {iteration}: true loss {loss:.6}, best {:.6}", best.0);
            }
            Err(err) => {
                consecutive_failures += 1;
                log::warn!("iteration {iteration}: intelligent query failed: {err}");
                record.failure = Some(format!("{err}"));
                // Failed queries still spend budget.
                if intelligent_queries >= config.stopping.max_iterations {
                    stop = Some(StopReason::MaxIterations);
                    record.stop_reason = stop;
                }
            }
        }
        observe(&record);
        records.push(record);
        if stop.is_none() && consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
            return Err(Error::ConsecutiveFailures(consecutive_failures));
        }
    }

    let (x_best, y_best, _) = dataset.record(best.1);
    Ok(RunOutcome {
        x_best: x_best.to_vec(),
        y_best: y_best.to_vec(),
        best_loss: best.0,
        best_index: best.1,
        stop_reason: stop.unwrap_or(StopReason::MaxIterations),
        intelligent_queries,
        initial_queries,
        log: RunLog {
            seed: config.seed,
            config: config.clone(),
            initial_dataset_size: initial_queries,
            best_initial_loss,
            records,
        },
        dataset,
        scoring,
        model,
    })
}
