use alloc::vec::Vec;

use super::finite_mean;
use crate::dataset::Dataset;
use crate::driver::collect_initial;
use crate::error::{Error, Result};
use crate::qmc::SobolSequence;
use crate::simbench::Simulator;
use crate::surrogate::{train, Standardizer, SurrogateModel, TrainConfig};

/// Records in the fixed held-out set.
pub const HELD_OUT_SIZE: usize = 200;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub size: usize,
    /// Held-out MAE per seed, in the same order as `SweepReport::seeds`.
    pub per_seed: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
}

/// The records a sweep queried.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepData {
    /// Training pool; size `s` trains on its first `s` records.
    pub pool: Dataset,
    pub held_out: Dataset,
}

/// Held-out MAE averaged over outputs, each output scaled by `scale`'s
/// output standard deviation.
fn held_out_mae(model: &SurrogateModel, held_out: &Dataset, scale: &Standardizer) -> Result<f64> {
    let n = held_out.output_dim();
    let mut sum = 0.0;
    for (x, y) in held_out.inputs().iter().zip(held_out.outputs()) {
        let p = model.predict(x)?;
        for k in 0..n {
            sum += (p[k] - y[k]).abs() / scale.output_std()[k];
        }
    }
    Ok(sum / (held_out.len() * n) as f64)
}

/// Trains on growing prefixes of one Sobol dataset and scores each model on
/// the next [`HELD_OUT_SIZE`] Sobol points. Errors are standardized by the
/// held-out outputs' own spread so every size shares one scale.
///
/// Queries `sim` exactly `max(sizes) + HELD_OUT_SIZE` times.
pub fn training_size_sweep(
    sim: &dyn Simulator,
    sizes: &[usize],
    seeds: &[u64],
    config: &TrainConfig,
) -> Result<(SweepReport, SweepData)> {
    if sizes.is_empty() || seeds.is_empty() {
        return Err(Error::Empty("sweep sizes or seeds"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("sweep sizes must be strictly ascending".into()));
    }
    config.validate()?;
    let largest = sizes[sizes.len() - 1];
    let mut seq = SobolSequence::new(sim.input_dim())?;
    let (pool, failed) = collect_initial(sim, largest, &mut seq)?;
    let (held_out, held_failed) = collect_initial(sim, HELD_OUT_SIZE, &mut seq)?;
    if !failed.is_empty() || !held_failed.is_empty() {
        log::warn!(
            "sweep: {} training and {} held-out queries failed and were skipped",
            failed.len(),
            held_failed.len()
        );
    }
    let scale = Standardizer::fit(&held_out)?;

    let cells = crate::par::map_indexed(sizes.len() * seeds.len(), |cell| {
        let (size, seed) = (sizes[cell / seeds.len()], seeds[cell % seeds.len()]);
        let cfg = TrainConfig { seed, ..config.clone() };
        train(&pool.prefix(size), &cfg).and_then(|(model, _)| held_out_mae(&model, &held_out, &scale))
    });
    let mut rows = Vec::with_capacity(sizes.len());
    for (i, &size) in sizes.iter().enumerate() {
        let per_seed = cells[i * seeds.len()..(i + 1) * seeds.len()]
            .iter()
            .cloned()
            .collect::<Result<Vec<f64>>>()?;
        let mean = finite_mean(per_seed.iter().copied()).ok_or(Error::NonFinite("sweep losses"))?;
        rows.push(SweepRow { size, per_seed, mean });
    }
    Ok((
        SweepReport {
            seeds: seeds.to_vec(),
            rows,
        },
        SweepData { pool, held_out },
    ))
}
