//! Simulator records: the growing training set of the outer loop.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    InitialSobol,
    IntelligentQuery,
    Baseline,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::InitialSobol => "initial-sobol",
            Provenance::IntelligentQuery => "intelligent-query",
            Provenance::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "initial-sobol" => Some(Provenance::InitialSobol),
            "intelligent-query" => Some(Provenance::IntelligentQuery),
            "baseline" => Some(Provenance::Baseline),
            _ => None,
        }
    }
}

/// Ordered `(x, y)` records sharing input dimension `m` and output dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    provenance: Vec<Provenance>,
}

impl Dataset {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Dataset {
            input_dim,
            output_dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
            provenance: Vec::new(),
        }
    }

    /// Builds a dataset from parallel vectors, tagging every record `tag`.
    pub fn from_records(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>, tag: Provenance) -> Result<Self> {
        let first_in = inputs.first().map(Vec::len).ok_or(Error::Empty("dataset"))?;
        let first_out = outputs.first().map(Vec::len).ok_or(Error::Empty("dataset"))?;
        if inputs.len() != outputs.len() {
            return Err(Error::DimensionMismatch {
                context: "dataset record count",
                expected: inputs.len(),
                actual: outputs.len(),
            });
        }
        let mut data = Dataset::new(first_in, first_out);
        for (x, y) in inputs.into_iter().zip(outputs) {
            data.push(x, y, tag)?;
        }
        Ok(data)
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>, tag: Provenance) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                context: "dataset input",
                expected: self.input_dim,
                actual: x.len(),
            });
        }
        if y.len() != self.output_dim {
            return Err(Error::DimensionMismatch {
                context: "dataset output",
                expected: self.output_dim,
                actual: y.len(),
            });
        }
        self.inputs.push(x);
        self.outputs.push(y);
        self.provenance.push(tag);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn record(&self, i: usize) -> (&[f64], &[f64], Provenance) {
        (&self.inputs[i], &self.outputs[i], self.provenance[i])
    }

    /// Errors with the index of the first record holding a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        for (record, (x, y)) in self.inputs.iter().zip(&self.outputs).enumerate() {
            if !x.iter().chain(y).all(|v| v.is_finite()) {
                return Err(Error::NonFiniteRecord { record });
            }
        }
        Ok(())
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            outputs: indices.iter().map(|&i| self.outputs[i].clone()).collect(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
        }
    }

    /// First `len` records.
    pub fn prefix(&self, len: usize) -> Dataset {
        let idx: Vec<usize> = (0..len.min(self.len())).collect();
        self.subset(&idx)
    }

    /// Copy with input column `col` removed.
    pub fn without_input(&self, col: usize) -> Result<Dataset> {
        if col >= self.input_dim || self.input_dim < 2 {
            return Err(Error::InvalidConfig(alloc::format!(
                "cannot drop input {col} from a {}-input dataset",
                self.input_dim
            )));
        }
        Ok(Dataset {
            input_dim: self.input_dim - 1,
            output_dim: self.output_dim,
            inputs: self
                .inputs
                .iter()
                .map(|x| {
                    x.iter()
                        .enumerate()
                        .filter(|&(i, _)| i != col)
                        .map(|(_, &v)| v)
                        .collect()
                })
                .collect(),
            outputs: self.outputs.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// Appends every record of `other`.
    pub fn extend_from(&mut self, other: &Dataset) -> Result<()> {
        for i in 0..other.len() {
            let (x, y, tag) = other.record(i);
            self.push(x.to_vec(), y.to_vec(), tag)?;
        }
        Ok(())
    }

    /// Seeded shuffle; the last `validation_fraction` of the permutation is
    /// the validation split. Both parts are non-empty.
    pub fn split_indices(&self, validation_fraction: f64, seed: u64) -> Result<Split> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!(
                "validation fraction {validation_fraction} not in (0, 1)"
            )));
        }
        let n = self.len();
        if n < 2 {
            return Err(Error::DatasetTooSmall { len: n, min: 2 });
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::seeded(seed));
        let n_val = (libm::round(n as f64 * validation_fraction) as usize).clamp(1, n - 1);
        let validation = order.split_off(n - n_val);
        Ok(Split {
            train: order,
            validation,
        })
    }
}

/// Record indices of a train/validation partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}
