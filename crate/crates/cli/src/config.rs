//! The pipeline configuration document.
//!
//! One JSON file drives every subcommand. Sections a subcommand does not use
//! may be omitted; optional fields fall back to the reference experiment
//! settings for the configured `n` and `m`.

use std::path::Path;

use actuator_core::maxmin::{CboConfig, PgdaConfig};
use actuator_core::model::HeatModelConfig;
use actuator_core::neural::Activation;
use actuator_core::numkit::DenseVector;
use actuator_core::rng::derive_seed;
use actuator_core::simulate::SimConfig;
use actuator_core::surrogate::dataset::{axis, interior_axis, tensor_grid, value_z0_grid};
use actuator_core::surrogate::{SurrogateKind, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub model: Option<HeatModelConfig>,
    pub data: Option<DataSection>,
    pub train: Option<TrainSection>,
    pub optimize: Option<OptimizeSection>,
    pub heatmap: Option<HeatmapSection>,
    pub simulate: Option<SimulateSection>,
}

/// A one-dimensional grid; multi-dimensional grids are tensor powers of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AxisSpec {
    /// `{iπ/denominator : i = 1..count}`
    Interior { count: usize, denominator: f64 },
    /// `count` equispaced points covering `[0, π]`
    Closed { count: usize },
    /// `{first + k·step : k = 0..count}`
    Uniform { count: usize, first: f64, step: f64 },
    Values { values: Vec<f64> },
}

impl AxisSpec {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match self {
            AxisSpec::Interior { count, denominator } => interior_axis(*count, *denominator),
            AxisSpec::Closed { count: 1 } => vec![0.0],
            AxisSpec::Closed { count } => axis(*count, 0.0, std::f64::consts::PI / (*count as f64 - 1.0)),
            AxisSpec::Uniform { count, first, step } => axis(*count, *first, *step),
            AxisSpec::Values { values } => values.clone(),
        };
        if pts.is_empty() {
            return Err(CliError::Config("grid axis is empty".into()));
        }
        Ok(pts)
    }

    pub fn grid(&self, dim: usize) -> Result<Vec<DenseVector>, CliError> {
        Ok(tensor_grid(&self.points()?, dim))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub r_axis: Option<AxisSpec>,
    pub z0_axis: Option<AxisSpec>,
}

fn default_kind() -> SurrogateKind {
    SurrogateKind::Structured
}
fn default_hidden_width() -> usize {
    128
}
fn default_activation() -> Activation {
    Activation::Relu
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_kind")]
    pub kind: SurrogateKind,
    #[serde(default = "default_hidden_width")]
    pub hidden_width: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    pub iterations: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub record_every: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            hidden_width: default_hidden_width(),
            activation: default_activation(),
            iterations: None,
            learning_rate: None,
            batch_size: None,
            record_every: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pgda,
    Cbo,
}

/// Flat union of the PGDA and CBO-SP settings; `K` is shared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct OptimizeSection {
    pub method: Method,
    pub K: Option<usize>,
    pub eta_r: Option<f64>,
    pub eta_z0: Option<f64>,
    pub z0_init: Option<Vec<f64>>,
    pub r_init: Option<Vec<f64>>,
    pub N1: Option<usize>,
    pub N2: Option<usize>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub dt: Option<f64>,
    pub mu: Option<f64>,
    pub init_mean_r: Option<Vec<f64>>,
    pub init_mean_z0: Option<Vec<f64>>,
    pub init_stddev: Option<f64>,
    #[serde(default)]
    pub early_stop: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSection {
    pub r_axis: Option<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Named(String),
    Vector(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Named("worst".into())
    }
}

fn default_threshold() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSection {
    #[serde(flatten)]
    pub sim: SimConfig,
    /// Placement to simulate when none is given on the command line.
    pub r: Option<Vec<f64>>,
    #[serde(default)]
    pub z0: InitialState,
    /// Sub-optimal placement simulated alongside for comparison.
    pub baseline_r: Option<Vec<f64>>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            r: None,
            z0: InitialState::default(),
            baseline_r: None,
            threshold: default_threshold(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<&HeatModelConfig, CliError> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `model` section".into()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn train_section(&self) -> TrainSection {
        self.train.clone().unwrap_or_default()
    }

    pub fn kind(&self) -> SurrogateKind {
        self.train_section().kind
    }

    /// Training grid of actuator locations.
    pub fn data_r_grid(&self) -> Result<Vec<DenseVector>, CliError> {
        let m = self.model()?.m;
        let spec = self.data.as_ref().and_then(|d| d.r_axis.clone());
        let spec = spec.unwrap_or(match (self.kind(), m) {
            (SurrogateKind::Structured, 1) => AxisSpec::Interior {
                count: 119,
                denominator: 120.0,
            },
            (SurrogateKind::Structured, _) => AxisSpec::Closed { count: 20 },
            (SurrogateKind::Unstructured, _) => AxisSpec::Interior {
                count: 99,
                denominator: 100.0,
            },
        });
        spec.grid(m)
    }

    pub fn data_z0_grid(&self) -> Result<Vec<DenseVector>, CliError> {
        let n = self.model()?.n;
        match self.data.as_ref().and_then(|d| d.z0_axis.clone()) {
            Some(spec) => spec.grid(n),
            None => Ok(value_z0_grid(n)),
        }
    }

    pub fn heatmap_grid(&self) -> Result<Vec<DenseVector>, CliError> {
        let m = self.model()?.m;
        let spec = self.heatmap.as_ref().and_then(|h| h.r_axis.clone()).unwrap_or(AxisSpec::Interior {
            count: 99,
            denominator: 100.0,
        });
        spec.grid(m)
    }

    pub fn train_config(&self, master_seed: u64) -> TrainConfig {
        let t = self.train_section();
        let d = TrainConfig::default();
        TrainConfig {
            iterations: t.iterations.unwrap_or(d.iterations),
            learning_rate: t.learning_rate.unwrap_or(d.learning_rate),
            batch_size: t.batch_size.unwrap_or(d.batch_size),
            record_every: t.record_every.unwrap_or(d.record_every),
            seed: derive_seed(master_seed, "minibatch"),
        }
    }

    fn optimize(&self) -> Result<&OptimizeSection, CliError> {
        self.optimize
            .as_ref()
            .ok_or_else(|| CliError::Config("missing `optimize` section".into()))
    }

    pub fn method(&self) -> Result<Method, CliError> {
        Ok(self.optimize()?.method)
    }

    pub fn pgda_config(&self) -> Result<PgdaConfig, CliError> {
        let model = self.model()?;
        let o = self.optimize()?;
        let p = PgdaConfig::reference(model.n, model.m);
        Ok(PgdaConfig {
            iterations: o.K.unwrap_or(p.iterations),
            eta_r: o.eta_r.unwrap_or(p.eta_r),
            eta_z0: o.eta_z0.unwrap_or(p.eta_z0),
            z0_init: o.z0_init.clone().map_or(p.z0_init, DenseVector::from),
            r_init: o.r_init.clone().map_or(p.r_init, DenseVector::from),
        })
    }

    pub fn cbo_config(&self, master_seed: u64) -> Result<CboConfig, CliError> {
        let model = self.model()?;
        let o = self.optimize()?;
        let p = CboConfig::reference(model.n, model.m, derive_seed(master_seed, "cbo"));
        Ok(CboConfig {
            n1: o.N1.unwrap_or(p.n1),
            n2: o.N2.unwrap_or(p.n2),
            lambda1: o.lambda1.unwrap_or(p.lambda1),
            lambda2: o.lambda2.unwrap_or(p.lambda2),
            sigma1: o.sigma1.unwrap_or(p.sigma1),
            sigma2: o.sigma2.unwrap_or(p.sigma2),
            alpha: o.alpha.unwrap_or(p.alpha),
            beta: o.beta.unwrap_or(p.beta),
            dt: o.dt.unwrap_or(p.dt),
            mu: o.mu.unwrap_or(p.mu),
            iterations: o.K.unwrap_or(p.iterations),
            init_mean_r: o.init_mean_r.clone().map_or(p.init_mean_r, DenseVector::from),
            init_mean_z0: o.init_mean_z0.clone().map_or(p.init_mean_z0, DenseVector::from),
            init_stddev: o.init_stddev.unwrap_or(p.init_stddev),
            seed: p.seed,
            early_stop: o.early_stop,
        })
    }

    pub fn simulate_section(&self) -> SimulateSection {
        self.simulate.clone().unwrap_or_default()
    }
}
