//! Strict JSON run configuration.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use surropt_core::analysis::BaselineConfig;
use surropt_core::driver::{DriverConfig, StoppingSpec};
use surropt_core::inputopt::MultiStartConfig;
use surropt_core::objective::{DEFAULT_ALPHA, FLARE_TARGETS, FLARE_WEIGHTS};
use surropt_core::simbench::{benchmark_sim, Perturbation, ToyFlareSim};
use surropt_core::{BoundsSpec, ObjectiveSpec, Simulator, TrainConfig};

use crate::external::ExternalSimulator;

pub const SCHEMA_VERSION: u32 = 1;

fn default_timeout() -> f64 {
    600.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SimulatorConfig {
    /// The built-in 13-input flare simulator.
    Toy {
        #[serde(default)]
        perturbation: Perturbation,
    },
    Benchmark {
        name: String,
        dim: usize,
    },
    /// A child process per query: one CSV line of inputs on stdin, one CSV
    /// line of outputs on stdout.
    External {
        command: Vec<String>,
        input_dim: usize,
        output_dim: usize,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LandscapeSourceKind {
    Surrogate,
    Simulator,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityStudy {
    pub seeds: Vec<u64>,
}

impl Default for SensitivityStudy {
    fn default() -> Self {
        SensitivityStudy { seeds: vec![0, 1, 2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeStudy {
    /// Zero-based input indices of the two grid axes.
    pub dims: [usize; 2],
    pub resolution: usize,
    /// Values of the other inputs; the bounds' midpoint when absent.
    pub frozen: Option<Vec<f64>>,
    pub source: LandscapeSourceKind,
}

impl Default for LandscapeStudy {
    fn default() -> Self {
        LandscapeStudy {
            dims: [5, 2],
            resolution: 21,
            frozen: None,
            source: LandscapeSourceKind::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepStudy {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
}

impl Default for SweepStudy {
    fn default() -> Self {
        SweepStudy {
            sizes: vec![50, 100, 200, 400, 800],
            seeds: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineStudy {
    pub budget: usize,
    pub trials: usize,
    pub reference_loss: Option<f64>,
}

impl Default for BaselineStudy {
    fn default() -> Self {
        BaselineStudy {
            budget: 30,
            trials: 5,
            reference_loss: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub sensitivity: SensitivityStudy,
    pub landscape: LandscapeStudy,
    pub sweep: SweepStudy,
    pub baseline: BaselineStudy,
}

fn default_initial_samples() -> usize {
    400
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("surropt-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub simulator: SimulatorConfig,
    /// Required for external simulators; other simulators bring their own.
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    /// Defaults to the flare targets and weights for the toy simulator.
    #[serde(default)]
    pub objective: Option<ObjectiveConfig>,
    #[serde(default = "default_initial_samples")]
    pub initial_samples: usize,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub multistart: MultiStartConfig,
    #[serde(default)]
    pub stopping: StoppingSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub study: StudyConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        if config.schema_version != SCHEMA_VERSION {
            bail!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            );
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = self.dims();
        if let Some(b) = &self.bounds {
            if b.dim() != m {
                bail!("bounds: {} entries but the simulator has {m} inputs", b.dim());
            }
        } else if matches!(self.simulator, SimulatorConfig::External { .. }) {
            bail!("bounds: required for an external simulator");
        }
        match &self.objective {
            Some(o) if o.targets.len() != n || o.weights.len() != n => {
                bail!("objective: targets and weights need {n} entries (one per simulator output)")
            }
            None if !matches!(self.simulator, SimulatorConfig::Toy { .. }) => {
                bail!("objective: required unless the simulator is the built-in toy")
            }
            _ => {}
        }
        if let SimulatorConfig::External {
            command, timeout_secs, ..
        } = &self.simulator
        {
            if command.is_empty() {
                bail!("simulator.command: must name a program");
            }
            if !(*timeout_secs > 0.0 && timeout_secs.is_finite()) {
                bail!("simulator.timeout_secs: must be positive");
            }
        }
        self.driver_config().validate()?;
        Ok(())
    }

    /// Input and output dimensions implied by the simulator section.
    pub fn dims(&self) -> (usize, usize) {
        match &self.simulator {
            SimulatorConfig::Toy { .. } => (13, 3),
            SimulatorConfig::Benchmark { dim, .. } => (*dim, 3),
            SimulatorConfig::External {
                input_dim, output_dim, ..
            } => (*input_dim, *output_dim),
        }
    }

    pub fn build_simulator(&self) -> Result<Box<dyn Simulator>> {
        Ok(match &self.simulator {
            SimulatorConfig::Toy { perturbation } => Box::new(ToyFlareSim::with_perturbation(*perturbation)),
            SimulatorConfig::Benchmark { name, dim } => benchmark_sim(name, *dim)?,
            SimulatorConfig::External {
                command,
                input_dim,
                output_dim,
                timeout_secs,
            } => {
                let bounds = self
                    .bounds
                    .clone()
                    .context("bounds: required for an external simulator")?;
                Box::new(ExternalSimulator::new(
                    command.clone(),
                    *input_dim,
                    *output_dim,
                    bounds,
                    Duration::from_secs_f64(*timeout_secs),
                )?)
            }
        })
    }

    /// Objective over the configured bounds (or the simulator's own).
    pub fn objective_spec(&self, sim: &dyn Simulator) -> Result<ObjectiveSpec> {
        let bounds = self.bounds.clone().unwrap_or_else(|| sim.bounds().clone());
        let (targets, weights, alpha) = match &self.objective {
            Some(o) => (o.targets.clone(), o.weights.clone(), o.alpha),
            None => (FLARE_TARGETS.to_vec(), FLARE_WEIGHTS.to_vec(), DEFAULT_ALPHA),
        };
        Ok(ObjectiveSpec::new(targets, weights, alpha, bounds)?)
    }

    pub fn driver_config(&self) -> DriverConfig {
        DriverConfig {
            initial_samples: self.initial_samples,
            train: self.train.clone(),
            multistart: self.multistart.clone(),
            stopping: self.stopping.clone(),
            seed: self.seed,
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            budget: self.study.baseline.budget,
            trials: self.study.baseline.trials,
            reference_loss: self.study.baseline.reference_loss,
            driver: self.driver_config(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_toy_config() {
        let c = RunConfig::from_json(r#"{"schema_version": 1, "simulator": {"kind": "toy"}}"#).unwrap();
        assert_eq!(c.initial_samples, 400);
        assert_eq!(c.dims(), (13, 3));
        assert_eq!(c.train, TrainConfig::default());
        let sim = c.build_simulator().unwrap();
        let spec = c.objective_spec(sim.as_ref()).unwrap();
        assert_eq!(spec.targets, FLARE_TARGETS.to_vec());
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json(r#"{"schema_version": 1, "simulator": {"kind": "toy"}, "sead": 3}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("sead"), "{err}");
        let err =
            RunConfig::from_json(r#"{"schema_version": 1, "simulator": {"kind": "toy"}, "train": {"epochs": 3}}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("epochs"), "{err}");
        let err = RunConfig::from_json(r#"{"schema_version": 1, "simulator": {"kind": "toy", "drag": 2}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("drag"), "{err}");
    }

    #[test]
    fn schema_and_shape_checks() {
        assert!(RunConfig::from_json(r#"{"schema_version": 2, "simulator": {"kind": "toy"}}"#).is_err());
        assert!(RunConfig::from_json(
            r#"{"schema_version": 1, "simulator": {"kind": "toy"}, "objective": {"targets": [1], "weights": [1]}}"#
        )
        .is_err());
        assert!(RunConfig::from_json(
            r#"{"schema_version": 1, "simulator": {"kind": "external", "command": ["x"], "input_dim": 2, "output_dim": 1}}"#
        )
        .is_err());
        assert!(
            RunConfig::from_json(r#"{"schema_version": 1, "simulator": {"kind": "toy"}, "initial_samples": 0}"#)
                .is_err()
        );
    }

    #[test]
    fn perturbation_fields_default_individually() {
        let c = RunConfig::from_json(
            r#"{"schema_version": 1, "simulator": {"kind": "toy", "perturbation": {"drag_scale": 1.11}}}"#,
        )
        .unwrap();
        assert_eq!(
            c.simulator,
            SimulatorConfig::Toy {
                perturbation: Perturbation {
                    drag_scale: 1.11,
                    ..Perturbation::default()
                }
            }
        );
    }
}
