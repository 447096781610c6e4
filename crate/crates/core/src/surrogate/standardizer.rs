use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Per-column mean/standard-deviation scaling of inputs and outputs.
///
/// Columns with zero variance get a standard deviation of 1 and are listed
/// in [`Standardizer::degenerate_inputs`] / [`Standardizer::degenerate_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    output_mean: Vec<f64>,
    output_std: Vec<f64>,
    degenerate_inputs: Vec<usize>,
    degenerate_outputs: Vec<usize>,
}

fn column_stats<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, dim: usize) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let count = rows.clone().count() as f64;
    let mut mean = vec![0.0; dim];
    for row in rows.clone() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut var = vec![0.0; dim];
    for row in rows {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let mut degenerate = Vec::new();
    let std = var
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let sd = libm::sqrt(s / count);
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                degenerate.push(i);
                1.0
            }
        })
        .collect();
    (mean, std, degenerate)
}

impl Standardizer {
    /// Population statistics over the records at `indices`.
    pub fn fit_subset(data: &Dataset, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Empty("standardizer fit set"));
        }
        let inputs = indices.iter().map(|&i| data.inputs()[i].as_slice());
        let outputs = indices.iter().map(|&i| data.outputs()[i].as_slice());
        let (input_mean, input_std, degenerate_inputs) = column_stats(inputs, data.input_dim());
        let (output_mean, output_std, degenerate_outputs) = column_stats(outputs, data.output_dim());
        if !input_mean.iter().chain(&output_mean).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("standardizer statistics"));
        }
        Ok(Standardizer {
            input_mean,
            input_std,
            output_mean,
            output_std,
            degenerate_inputs,
            degenerate_outputs,
        })
    }

    pub fn fit(data: &Dataset) -> Result<Self> {
        let all: Vec<usize> = (0..data.len()).collect();
        Self::fit_subset(data, &all)
    }

    pub fn identity(input_dim: usize, output_dim: usize) -> Self {
        Standardizer {
            input_mean: vec![0.0; input_dim],
            input_std: vec![1.0; input_dim],
            output_mean: vec![0.0; output_dim],
            output_std: vec![1.0; output_dim],
            degenerate_inputs: Vec::new(),
            degenerate_outputs: Vec::new(),
        }
    }

    /// Rebuilds a standardizer from stored statistics (e.g. a model file).
    pub fn from_parts(
        input_mean: Vec<f64>,
        input_std: Vec<f64>,
        output_mean: Vec<f64>,
        output_std: Vec<f64>,
    ) -> Result<Self> {
        if input_mean.len() != input_std.len() {
            return Err(Error::DimensionMismatch {
                context: "standardizer inputs",
                expected: input_mean.len(),
                actual: input_std.len(),
            });
        }
        if output_mean.len() != output_std.len() {
            return Err(Error::DimensionMismatch {
                context: "standardizer outputs",
                expected: output_mean.len(),
                actual: output_std.len(),
            });
        }
        let all = input_mean.iter().chain(&output_mean);
        if !all.clone().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("standardizer means"));
        }
        if !input_std.iter().chain(&output_std).all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::InvalidConfig("standard deviations must be positive".into()));
        }
        Ok(Standardizer {
            input_mean,
            input_std,
            output_mean,
            output_std,
            degenerate_inputs: Vec::new(),
            degenerate_outputs: Vec::new(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.output_mean.len()
    }

    pub fn input_mean(&self) -> &[f64] {
        &self.input_mean
    }

    pub fn input_std(&self) -> &[f64] {
        &self.input_std
    }

    pub fn output_mean(&self) -> &[f64] {
        &self.output_mean
    }

    pub fn output_std(&self) -> &[f64] {
        &self.output_std
    }

    pub fn degenerate_inputs(&self) -> &[usize] {
        &self.degenerate_inputs
    }

    pub fn degenerate_outputs(&self) -> &[usize] {
        &self.degenerate_outputs
    }

    pub fn standardize_input(&self, x: &[f64]) -> Vec<f64> {
        scale(x, &self.input_mean, &self.input_std)
    }

    pub fn destandardize_input(&self, z: &[f64]) -> Vec<f64> {
        unscale(z, &self.input_mean, &self.input_std)
    }

    pub fn standardize_output(&self, y: &[f64]) -> Vec<f64> {
        scale(y, &self.output_mean, &self.output_std)
    }

    pub fn destandardize_output(&self, z: &[f64]) -> Vec<f64> {
        unscale(z, &self.output_mean, &self.output_std)
    }
}

fn scale(v: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    v.iter().zip(mean).zip(std).map(|((v, m), s)| (v - m) / s).collect()
}

fn unscale(z: &[f64], mean: &[f64], std: &[f64]) -> Vec<f64> {
    z.iter().zip(mean).zip(std).map(|((z, m), s)| z * s + m).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Provenance;
    use proptest::prelude::*;

    fn data(xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>) -> Dataset {
        Dataset::from_records(xs, ys, Provenance::InitialSobol).unwrap()
    }

    #[test]
    fn zero_variance_column_is_flagged() {
        let d = data(
            vec![vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]],
            vec![vec![0.0], vec![0.0], vec![0.0]],
        );
        let s = Standardizer::fit(&d).unwrap();
        assert_eq!(s.input_std()[1], 1.0);
        assert_eq!(s.degenerate_inputs(), &[1]);
        assert_eq!(s.degenerate_outputs(), &[0]);
        assert!((s.input_std()[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn from_parts_rejects_nonpositive_std() {
        assert!(Standardizer::from_parts(vec![0.0], vec![0.0], vec![0.0], vec![1.0]).is_err());
        assert!(Standardizer::from_parts(vec![0.0], vec![1.0, 2.0], vec![0.0], vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_identity(
            rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..30),
            probe in prop::collection::vec(-1e3f64..1e3, 3),
        ) {
            let ys = rows.iter().map(|r| vec![r[0] * 2.0 - r[1]]).collect();
            let s = Standardizer::fit(&data(rows.clone(), ys)).unwrap();
            let back = s.destandardize_input(&s.standardize_input(&probe));
            for (a, b) in back.iter().zip(&probe) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            let y = [probe[2]];
            let back = s.destandardize_output(&s.standardize_output(&y));
            prop_assert!((back[0] - y[0]).abs() <= 1e-12 * y[0].abs().max(1.0));
        }
    }
}
