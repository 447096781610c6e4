//! On-disk formats: dataset CSV, model JSON, JSON Lines run logs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use surropt_core::surrogate::SurrogateModel;
use surropt_core::{Dataset, Provenance, Standardizer};

/// Writes `x_1..x_m,y_1..y_n,provenance`. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header: Vec<String> = (1..=data.input_dim()).map(|i| format!("x_{i}")).collect();
    header.extend((1..=data.output_dim()).map(|k| format!("y_{k}")));
    header.push("provenance".into());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let (x, y, tag) = data.record(i);
        let mut row: Vec<String> = x.iter().chain(y).map(f64::to_string).collect();
        row.push(tag.as_str().into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers()?.clone();
    let m = header.iter().filter(|h| h.starts_with("x_")).count();
    let n = header.iter().filter(|h| h.starts_with("y_")).count();
    ensure!(
        header.len() == m + n + 1 && header.get(m + n) == Some("provenance"),
        "{}: expected header x_1..x_m,y_1..y_n,provenance",
        path.display()
    );
    let mut data = Dataset::new(m, n);
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .with_context(|| format!("{} row {}: column {}", path.display(), line + 1, &header[j]))
        };
        let x = (0..m).map(parse).collect::<Result<Vec<_>>>()?;
        let y = (m..m + n).map(parse).collect::<Result<Vec<_>>>()?;
        let Some(tag) = Provenance::parse(&record[m + n]) else {
            bail!(
                "{} row {}: unknown provenance {:?}",
                path.display(),
                line + 1,
                &record[m + n]
            );
        };
        data.push(x, y, tag)?;
    }
    Ok(data)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Appends one JSON object per line, flushing after each.
pub struct JsonLines {
    out: BufWriter<File>,
}

impl JsonLines {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(JsonLines {
            out: BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        writeln!(self.out)?;
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InOut {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandardizerFile {
    pub means: InOut,
    pub stds: InOut,
}

/// `model.json`: weights are per layer, one array per output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub activation: String,
    pub standardizer: StandardizerFile,
    pub train_seed: u64,
}

impl From<&SurrogateModel> for ModelFile {
    fn from(model: &SurrogateModel) -> Self {
        let st = model.standardizer();
        ModelFile {
            layer_sizes: model.layer_sizes(),
            weights: model
                .layers()
                .iter()
                .map(|l| l.weights().chunks(l.inputs()).map(<[f64]>::to_vec).collect())
                .collect(),
            biases: model.layers().iter().map(|l| l.bias().to_vec()).collect(),
            activation: "tanh".into(),
            standardizer: StandardizerFile {
                means: InOut {
                    input: st.input_mean().to_vec(),
                    output: st.output_mean().to_vec(),
                },
                stds: InOut {
                    input: st.input_std().to_vec(),
                    output: st.output_std().to_vec(),
                },
            },
            train_seed: model.train_seed(),
        }
    }
}

impl ModelFile {
    pub fn into_model(self) -> Result<SurrogateModel> {
        ensure!(
            self.activation == "tanh",
            "unsupported activation {:?}",
            self.activation
        );
        let st = Standardizer::from_parts(
            self.standardizer.means.input,
            self.standardizer.stds.input,
            self.standardizer.means.output,
            self.standardizer.stds.output,
        )?;
        let weights = self.weights.into_iter().map(|rows| rows.concat()).collect();
        Ok(SurrogateModel::from_parameters(
            &self.layer_sizes,
            weights,
            self.biases,
            st,
            self.train_seed,
        )?)
    }
}

pub fn write_model(path: &Path, model: &SurrogateModel) -> Result<()> {
    write_json(path, &ModelFile::from(model))
}

pub fn read_model(path: &Path) -> Result<SurrogateModel> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ModelFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.into_model()
}
