//! The `run`, `sample` and `study` commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use surropt_core::analysis::{
    export_predictions, landscape, mc_baseline, prediction_correlations, sensitivity, training_size_sweep,
    LandscapeGrid, LandscapeSource,
};
use surropt_core::driver::{collect_initial, run_from, FailedQuery, RunOutcome, StopReason};
use surropt_core::surrogate::train;
use surropt_core::{Dataset, Simulator, SobolSequence, Standardizer, TrainConfig};

use crate::config::{LandscapeSourceKind, RunConfig};
use crate::formats::{read_dataset_csv, write_dataset_csv, write_json, write_model, JsonLines};

pub const INITIAL_CSV: &str = "initial.csv";

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub resume: bool,
}

impl Overrides {
    pub fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
    }
}

/// `summary.json`; identical inputs give byte-identical files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub x_best: Vec<f64>,
    pub y_best: Vec<f64>,
    pub true_loss: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub best_initial_loss: f64,
    /// Records in the initial design, whether sampled now or resumed.
    pub initial_records: usize,
    /// Simulator queries made by this invocation, failed ones included.
    pub initial_queries: usize,
    pub intelligent_queries: usize,
    pub total_queries: usize,
    pub seed: u64,
}

impl Summary {
    pub fn new(out: &RunOutcome, initial_queries: usize, total_queries: usize) -> Self {
        Summary {
            x_best: out.x_best.clone(),
            y_best: out.y_best.clone(),
            true_loss: out.best_loss,
            iterations: out.iterations(),
            stop_reason: out.stop_reason,
            best_initial_loss: out.log.best_initial_loss,
            initial_records: out.initial_queries,
            initial_queries,
            intelligent_queries: out.intelligent_queries,
            total_queries,
            seed: out.log.seed,
        }
    }
}

fn output_dir(config: &RunConfig) -> Result<&Path> {
    let dir = config.output_dir.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_failures(dir: &Path, name: &str, failed: &[FailedQuery]) -> Result<()> {
    if failed.is_empty() {
        return Ok(());
    }
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["x", "error"])?;
    for f in failed {
        let x = f.x.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        w.write_record([x, f.error.clone()])?;
    }
    w.flush()?;
    log::warn!("{} failed queries recorded in {}", failed.len(), path.display());
    Ok(())
}

/// Queries the initial Sobol design and writes it to `initial.csv`.
pub fn sample_initial(sim: &dyn Simulator, count: usize, dir: &Path) -> Result<Dataset> {
    ensure!(count > 0, "sample count must be positive");
    let (data, failed) = collect_initial(sim, count, &mut SobolSequence::new(sim.input_dim())?)?;
    write_failures(dir, "initial_failures.csv", &failed)?;
    write_dataset_csv(&dir.join(INITIAL_CSV), &data)?;
    Ok(data)
}

/// The initial dataset: read back from `initial.csv` when resuming,
/// otherwise freshly sampled.
fn initial_dataset(config: &RunConfig, sim: &dyn Simulator, dir: &Path, resume: bool) -> Result<Dataset> {
    let path = dir.join(INITIAL_CSV);
    if resume {
        let data = read_dataset_csv(&path).context("--resume needs a readable initial.csv")?;
        ensure!(
            data.input_dim() == sim.input_dim() && data.output_dim() == sim.output_dim(),
            "{} has {}x{} columns, simulator is {}x{}",
            path.display(),
            data.input_dim(),
            data.output_dim(),
            sim.input_dim(),
            sim.output_dim()
        );
        ensure!(!data.is_empty(), "{} has no records", path.display());
        log::info!("resumed {} initial records from {}", data.len(), path.display());
        return Ok(data);
    }
    sample_initial(sim, config.initial_samples, dir)
}

pub fn cmd_sample(config: &RunConfig, count: Option<usize>) -> Result<Dataset> {
    let sim = config.build_simulator()?;
    let dir = output_dir(config)?;
    sample_initial(sim.as_ref(), count.unwrap_or(config.initial_samples), dir)
}

/// End-to-end optimization. Writes `initial.csv`, `dataset.csv`,
/// `runlog.jsonl`, `model.json` and `summary.json`.
pub fn cmd_run(config: &RunConfig, resume: bool) -> Result<Summary> {
    let sim = config.build_simulator()?;
    let spec = config.objective_spec(sim.as_ref())?;
    let dir = output_dir(config)?;
    let initial = initial_dataset(config, sim.as_ref(), dir, resume)?;
    let initial_queries = sim.query_count();

    let mut runlog = JsonLines::create(&dir.join("runlog.jsonl"))?;
    let mut log_error = None;
    let outcome = run_from(sim.as_ref(), &spec, &config.driver_config(), initial, &mut |record| {
        if let Err(e) = runlog.write(record) {
            log_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.context("writing runlog.jsonl"));
    }

    write_dataset_csv(&dir.join("dataset.csv"), &outcome.dataset)?;
    if let Some(model) = &outcome.model {
        write_model(&dir.join("model.json"), model)?;
    }
    let summary = Summary::new(&outcome, initial_queries, sim.query_count());
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Sensitivity,
    Landscape,
    Sweep,
    Baseline,
    Predictions,
}

/// Landscape options that may come from the command line.
#[derive(Debug, Clone, Default)]
pub struct LandscapeArgs {
    pub dims: Option<(usize, usize)>,
    pub resolution: Option<usize>,
}

pub fn cmd_study(config: &RunConfig, study: Study, resume: bool, args: &LandscapeArgs) -> Result<()> {
    let sim = config.build_simulator()?;
    let dir = output_dir(config)?;
    match study {
        Study::Sensitivity => study_sensitivity(config, sim.as_ref(), dir, resume),
        Study::Landscape => study_landscape(config, sim.as_ref(), dir, resume, args),
        Study::Sweep => study_sweep(config, sim.as_ref(), dir),
        Study::Baseline => study_baseline(config, sim.as_ref(), dir),
        Study::Predictions => study_predictions(config, sim.as_ref(), dir, resume),
    }
}

fn seeded_train(config: &RunConfig) -> TrainConfig {
    TrainConfig {
        seed: config.seed,
        ..config.train.clone()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn study_sensitivity(config: &RunConfig, sim: &dyn Simulator, dir: &Path, resume: bool) -> Result<()> {
    let data = initial_dataset(config, sim, dir, resume)?;
    let mut report = sensitivity(&data, &config.train, &config.study.sensitivity.seeds)?;
    report.set_names(&sim.input_names());
    let mut w = csv::Writer::from_path(dir.join("sensitivity.csv"))?;
    w.write_record([
        "input",
        "name",
        "validation_loss",
        "absolute_increase",
        "relative_increase",
        "rank",
    ])?;
    w.write_record([
        "baseline",
        "all-inputs",
        &report.baseline_loss.to_string(),
        "0",
        "0",
        "",
    ])?;
    for e in &report.entries {
        let rank = report
            .ranking
            .iter()
            .position(|&i| i == e.index)
            .map(|r| r + 1)
            .unwrap_or(0);
        w.write_record([
            (e.index + 1).to_string(),
            e.name.clone(),
            opt(e.validation_loss_without_input),
            opt(e.absolute_increase),
            opt(e.relative_increase),
            rank.to_string(),
        ])?;
    }
    w.flush()?;
    write_json(&dir.join("sensitivity.json"), &report)
}

fn study_landscape(
    config: &RunConfig,
    sim: &dyn Simulator,
    dir: &Path,
    resume: bool,
    args: &LandscapeArgs,
) -> Result<()> {
    let settings = &config.study.landscape;
    let dims = args.dims.unwrap_or((settings.dims[0], settings.dims[1]));
    let resolution = args.resolution.unwrap_or(settings.resolution);
    let spec = config.objective_spec(sim)?;
    let frozen = match &settings.frozen {
        Some(f) => f.clone(),
        None => spec.bounds.from_unit(&vec![0.5; spec.input_dim()]),
    };
    let data = initial_dataset(config, sim, dir, resume)?;
    let scoring = Standardizer::fit(&data)?;

    let mut grids: Vec<(&str, LandscapeGrid)> = Vec::new();
    if settings.source != LandscapeSourceKind::Simulator {
        let (model, _) = train(&data, &seeded_train(config))?;
        write_model(&dir.join("landscape_model.json"), &model)?;
        let grid = landscape(
            LandscapeSource::Surrogate(&model),
            &spec,
            &scoring,
            dims,
            &frozen,
            resolution,
        )?;
        grids.push(("surrogate_loss", grid));
    }
    if settings.source != LandscapeSourceKind::Surrogate {
        let grid = landscape(
            LandscapeSource::Simulator(sim),
            &spec,
            &scoring,
            dims,
            &frozen,
            resolution,
        )?;
        grids.push(("true_loss", grid));
    }

    let mut w = csv::Writer::from_path(dir.join("landscape.csv"))?;
    let mut header = vec![
        "i".to_string(),
        "j".to_string(),
        format!("x_{}", dims.0 + 1),
        format!("x_{}", dims.1 + 1),
    ];
    header.extend(grids.iter().map(|(name, _)| name.to_string()));
    w.write_record(&header)?;
    let first = &grids[0].1;
    for i in 0..resolution {
        for j in 0..resolution {
            let mut row = vec![
                i.to_string(),
                j.to_string(),
                first.axis1[i].to_string(),
                first.axis2[j].to_string(),
            ];
            row.extend(grids.iter().map(|(_, g)| opt(g.losses[i][j])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    let json: Vec<_> = grids
        .iter()
        .map(|(name, g)| serde_json::json!({ "source": name, "grid": g }))
        .collect();
    write_json(&dir.join("landscape.json"), &json)
}

fn study_sweep(config: &RunConfig, sim: &dyn Simulator, dir: &Path) -> Result<()> {
    let settings = &config.study.sweep;
    let (report, data) = training_size_sweep(sim, &settings.sizes, &settings.seeds, &config.train)?;
    write_dataset_csv(&dir.join("sweep_pool.csv"), &data.pool)?;
    write_dataset_csv(&dir.join("sweep_held_out.csv"), &data.held_out)?;
    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    let mut header = vec!["size".to_string(), "mean_loss".to_string()];
    header.extend(report.seeds.iter().map(|s| format!("seed_{s}")));
    w.write_record(&header)?;
    for row in &report.rows {
        let mut rec = vec![row.size.to_string(), row.mean.to_string()];
        rec.extend(row.per_seed.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_json(&dir.join("sweep.json"), &report)
}

fn study_baseline(config: &RunConfig, sim: &dyn Simulator, dir: &Path) -> Result<()> {
    let spec = config.objective_spec(sim)?;
    let (comparison, records) = mc_baseline(sim, &spec, &config.baseline_config())?;
    write_dataset_csv(&dir.join("baseline_initial.csv"), &records.initial)?;
    for (t, (intelligent, random)) in records.intelligent.iter().zip(&records.random).enumerate() {
        write_dataset_csv(&dir.join(format!("baseline_trial{t}_intelligent.csv")), intelligent)?;
        write_dataset_csv(&dir.join(format!("baseline_trial{t}_random.csv")), random)?;
    }
    let mut w = csv::Writer::from_path(dir.join("baseline.csv"))?;
    let mut header = vec!["series".to_string()];
    header.extend((1..=comparison.budget).map(|q| format!("q_{q}")));
    w.write_record(&header)?;
    let mut series = |name: String, curve: &[f64]| -> Result<()> {
        if curve.is_empty() {
            return Ok(());
        }
        let mut rec = vec![name];
        rec.extend(curve.iter().map(f64::to_string));
        w.write_record(&rec)?;
        Ok(())
    };
    series("mean_intelligent".into(), &comparison.mean_intelligent)?;
    series("mean_random".into(), &comparison.mean_random)?;
    for (t, c) in comparison.intelligent_curves.iter().enumerate() {
        series(format!("intelligent_trial{t}"), c)?;
    }
    for (t, c) in comparison.random_curves.iter().enumerate() {
        series(format!("random_trial{t}"), c)?;
    }
    w.flush()?;
    write_json(&dir.join("baseline.json"), &comparison)
}

fn study_predictions(config: &RunConfig, sim: &dyn Simulator, dir: &Path, resume: bool) -> Result<()> {
    let data = initial_dataset(config, sim, dir, resume)?;
    let train_config = seeded_train(config);
    let (model, _) = train(&data, &train_config)?;
    let held_out = data.subset(&train_config.split(&data)?.validation);
    let rows = export_predictions(&model, &held_out)?;
    let mut w = csv::Writer::from_path(dir.join("predictions.csv"))?;
    w.write_record(["output_index", "actual", "predicted"])?;
    for r in &rows {
        w.write_record([
            (r.output_index + 1).to_string(),
            r.actual.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    w.flush()?;
    write_model(&dir.join("predictions_model.json"), &model)?;
    let correlations = prediction_correlations(&rows, model.output_dim());
    write_json(
        &dir.join("predictions.json"),
        &serde_json::json!({ "held_out_records": held_out.len(), "pearson": correlations }),
    )
}

/// Exit status for a finished run: 0 when a goal or convergence stop, 2 when
/// the iteration budget ran out.
pub fn run_exit_code(reason: StopReason) -> i32 {
    match reason {
        StopReason::Goal | StopReason::Converged => 0,
        StopReason::MaxIterations => 2,
    }
}

pub fn parse_dims(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("--dims expects two comma-separated indices, got {text:?}");
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}
