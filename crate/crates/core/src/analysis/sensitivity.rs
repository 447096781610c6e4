use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::surrogate::{train, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityEntry {
    pub index: usize,
    pub name: String,
    /// Seed-averaged validation MAE of the model trained without this input;
    /// `None` when any seed failed to train.
    pub validation_loss_without_input: Option<f64>,
    pub absolute_increase: Option<f64>,
    pub relative_increase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SensitivityReport {
    /// Seed-averaged validation MAE with every input present.
    pub baseline_loss: f64,
    pub seeds: Vec<u64>,
    pub entries: Vec<SensitivityEntry>,
    /// Input indices by descending absolute loss increase; inputs with
    /// missing results come last, in index order.
    pub ranking: Vec<usize>,
}

impl SensitivityReport {
    /// Replaces the default `x_<i>` names.
    pub fn set_names(&mut self, names: &[&str]) {
        for (entry, name) in self.entries.iter_mut().zip(names) {
            entry.name = String::from(*name);
        }
    }
}

/// Leave-one-out input sensitivity: per seed, trains the full model and one
/// model per dropped input column, then ranks inputs by how much their
/// removal raises the seed-averaged validation MAE.
///
/// Every model for a given seed sees the same train/validation partition.
pub fn sensitivity(data: &Dataset, config: &TrainConfig, seeds: &[u64]) -> Result<SensitivityReport> {
    let m = data.input_dim();
    if m < 2 {
        return Err(Error::InvalidConfig("sensitivity needs at least two inputs".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Empty("sensitivity seed list"));
    }
    config.validate()?;

    // Cell (c, s): column c dropped (c == m means none) under seed s.
    let cells = (m + 1) * seeds.len();
    let losses: Vec<Result<f64>> = par::map_indexed(cells, |cell| {
        let (column, s) = (cell / seeds.len(), cell % seeds.len());
        let cfg = TrainConfig {
            seed: seeds[s],
            ..config.clone()
        };
        let reduced;
        let subset = if column == m {
            data
        } else {
            reduced = data.without_input(column)?;
            &reduced
        };
        train(subset, &cfg).map(|(_, report)| report.best_validation_loss())
    });
    let column_loss = |column: usize| -> Result<f64> {
        let mut sum = 0.0;
        for s in 0..seeds.len() {
            match &losses[column * seeds.len() + s] {
                Ok(v) => sum += v,
                Err(err) => return Err(err.clone()),
            }
        }
        Ok(sum / seeds.len() as f64)
    };

    let baseline_loss = column_loss(m)?;
    let entries: Vec<SensitivityEntry> = (0..m)
        .map(|i| {
            let loss = match column_loss(i) {
                Ok(v) => Some(v),
                Err(err) => {
                    log::warn!("sensitivity for input {i} unavailable: {err}");
                    None
                }
            };
            SensitivityEntry {
                index: i,
                name: format!("x_{}", i + 1),
                validation_loss_without_input: loss,
                absolute_increase: loss.map(|l| l - baseline_loss),
                relative_increase: loss.map(|l| (l - baseline_loss) / baseline_loss),
            }
        })
        .collect();

    let mut ranking: Vec<usize> = (0..m).collect();
    ranking.sort_by(|&a, &b| {
        let key = |i: usize| entries[i].absolute_increase;
        match (key(a), key(b)) {
            (Some(x), Some(y)) => y.total_cmp(&x).then(a.cmp(&b)),
            (Some(_), None) => core::cmp::Ordering::Less,
            (None, Some(_)) => core::cmp::Ordering::Greater,
            (None, None) => a.cmp(&b),
        }
    });

    Ok(SensitivityReport {
        baseline_loss,
        seeds: seeds.to_vec(),
        entries,
        ranking,
    })
}
