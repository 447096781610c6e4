use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::surrogate::SurrogateModel;

/// One point of a predicted-versus-actual scatter, physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictionRow {
    pub output_index: usize,
    pub actual: f64,
    pub predicted: f64,
}

/// Predictions for every record of `held_out`, output-major: all rows for
/// output 0, then output 1, and so on.
pub fn export_predictions(model: &SurrogateModel, held_out: &Dataset) -> Result<Vec<PredictionRow>> {
    if held_out.is_empty() {
        return Err(Error::Empty("held-out split"));
    }
    if held_out.output_dim() != model.output_dim() {
        return Err(Error::DimensionMismatch {
            context: "export_predictions outputs",
            expected: model.output_dim(),
            actual: held_out.output_dim(),
        });
    }
    let predicted = held_out
        .inputs()
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(held_out.len() * model.output_dim());
    for k in 0..model.output_dim() {
        for (p, y) in predicted.iter().zip(held_out.outputs()) {
            rows.push(PredictionRow {
                output_index: k,
                actual: y[k],
                predicted: p[k],
            });
        }
    }
    Ok(rows)
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let (ma, mb) = (
        a[..n].iter().sum::<f64>() / n as f64,
        b[..n].iter().sum::<f64>() / n as f64,
    );
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / libm::sqrt(saa * sbb))
}

/// Per-output correlation between actual and predicted values.
pub fn prediction_correlations(rows: &[PredictionRow], outputs: usize) -> Vec<Option<f64>> {
    (0..outputs)
        .map(|k| {
            let (actual, predicted): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.output_index == k)
                .map(|r| (r.actual, r.predicted))
                .unzip();
            pearson(&actual, &predicted)
        })
        .collect()
}
