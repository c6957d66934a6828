//! Neural surrogates of the LQR value function.
//!
//! * [`UnstructuredSurrogate`] fits `V(z0, r)` directly from `(z0, r)`.
//! * [`StructuredSurrogate`] fits a Cholesky-like factor of `Π(r)`, which
//!   makes the value nonnegative and convex in `z0` by construction.

pub mod dataset;
pub mod structured;
pub mod unstructured;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maxmin::SaddleObjective;
use crate::model::ModelError;
use crate::neural::{Mlp, NeuralError};
use crate::numkit::{DenseVector, NumError};
use crate::riccati::RiccatiError;

pub use dataset::{
    build_riccati_dataset, build_value_dataset, RiccatiDataset, RiccatiRecord, ValueDataset, ValueRecord,
};
pub use structured::{StructuredSurrogate, DIAGONAL_EPS};
pub use unstructured::UnstructuredSurrogate;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("model error at r = {r:?}: {source}")]
    Model { r: Vec<f64>, source: ModelError },
    #[error("Riccati solve failed at r = {r:?}: {source}")]
    Solver { r: Vec<f64>, source: RiccatiError },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training produced a non-finite loss at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

fn default_iterations() -> usize {
    6000
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_batch_size() -> usize {
    1024
}
fn default_record_every() -> usize {
    100
}

/// Optimizer settings shared by both surrogate kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Mini-batch size of the unstructured surrogate; the structured one is full batch.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// Loss recording interval of the unstructured surrogate.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            seed: 0,
            record_every: default_record_every(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SurrogateError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(SurrogateError::InvalidConfig(format!(
                "learning_rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.record_every == 0 {
            return Err(SurrogateError::InvalidConfig(
                "batch_size and record_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `(iteration, loss)` pairs in recording order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory(Vec<(usize, f64)>);

impl LossHistory {
    pub fn push(&mut self, iteration: usize, loss: f64) {
        self.0.push((iteration, loss));
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(|(_, v)| *v).collect()
    }

    pub fn first(&self) -> f64 {
        self.0.first().map_or(f64::NAN, |e| e.1)
    }

    pub fn last(&self) -> f64 {
        self.0.last().map_or(f64::NAN, |e| e.1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SurrogateError> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| SurrogateError::Format(e.to_string());
        w.write_record(["iteration", "loss"]).map_err(err)?;
        for (it, loss) in &self.0 {
            w.write_record([it.to_string(), dataset::fmt_f64(*loss)]).map_err(err)?;
        }
        w.flush().map_err(|e| SurrogateError::Format(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateKind {
    Structured,
    Unstructured,
}

/// A trained surrogate of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Surrogate {
    Structured(StructuredSurrogate),
    Unstructured(UnstructuredSurrogate),
}

/// On-disk bundle: `{kind, n, m, eps, networks}`.
#[derive(Serialize, Deserialize)]
struct Bundle {
    kind: SurrogateKind,
    n: usize,
    m: usize,
    eps: f64,
    networks: Vec<Mlp>,
}

impl Surrogate {
    pub fn kind(&self) -> SurrogateKind {
        match self {
            Surrogate::Structured(_) => SurrogateKind::Structured,
            Surrogate::Unstructured(_) => SurrogateKind::Unstructured,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Surrogate::Structured(s) => s.n(),
            Surrogate::Unstructured(s) => s.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Surrogate::Structured(s) => s.m(),
            Surrogate::Unstructured(s) => s.m(),
        }
    }

    pub fn value(&self, z0: &[f64], r: &[f64]) -> Result<f64, SurrogateError> {
        match self {
            Surrogate::Structured(s) => s.value(z0, r),
            Surrogate::Unstructured(s) => s.value(z0, r),
        }
    }

    pub fn gradient(&self, z0: &[f64], r: &[f64]) -> Result<(DenseVector, DenseVector), SurrogateError> {
        match self {
            Surrogate::Structured(s) => s.gradient(z0, r),
            Surrogate::Unstructured(s) => s.gradient(z0, r),
        }
    }

    /// max over unit z0 of V_θ(z0, r).
    pub fn worst_case_value(&self, r: &[f64]) -> Result<f64, SurrogateError> {
        match self {
            Surrogate::Structured(s) => s.worst_case_value(r),
            Surrogate::Unstructured(s) => s.worst_case_value(r),
        }
    }

    pub fn to_json(&self) -> Result<String, SurrogateError> {
        let bundle = match self {
            Surrogate::Structured(s) => Bundle {
                kind: SurrogateKind::Structured,
                n: s.n(),
                m: s.m(),
                eps: s.eps,
                networks: s.entries.clone(),
            },
            // no diagonal shift for the unstructured kind
            Surrogate::Unstructured(s) => Bundle {
                kind: SurrogateKind::Unstructured,
                n: s.n(),
                m: s.m(),
                eps: 0.0,
                networks: vec![s.net.clone()],
            },
        };
        serde_json::to_string_pretty(&bundle).map_err(|e| SurrogateError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, SurrogateError> {
        let bundle: Bundle = serde_json::from_str(text).map_err(|e| SurrogateError::Format(e.to_string()))?;
        match bundle.kind {
            SurrogateKind::Structured => Ok(Surrogate::Structured(StructuredSurrogate::from_parts(
                bundle.n,
                bundle.m,
                bundle.eps,
                bundle.networks,
            )?)),
            SurrogateKind::Unstructured => {
                let mut nets = bundle.networks;
                if nets.len() != 1 {
                    return Err(SurrogateError::Format(format!(
                        "unstructured bundle holds {} networks",
                        nets.len()
                    )));
                }
                Ok(Surrogate::Unstructured(UnstructuredSurrogate::from_parts(
                    bundle.n,
                    bundle.m,
                    nets.remove(0),
                )?))
            }
        }
    }
}

/// Surrogate worst-case value max_{‖z0‖=1} V_θ(z0, r).
pub fn worst_case_value_theta(s: &Surrogate, r: &[f64]) -> Result<f64, SurrogateError> {
    s.worst_case_value(r)
}

impl SaddleObjective for StructuredSurrogate {
    fn z0_dim(&self) -> usize {
        self.n()
    }

    fn r_dim(&self) -> usize {
        self.m()
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64 {
        StructuredSurrogate::value(self, z0, r).expect("dimensions validated by the optimizer")
    }

    fn gradient(&self, z0: &[f64], r: &[f64]) -> Option<(DenseVector, DenseVector)> {
        StructuredSurrogate::gradient(self, z0, r).ok()
    }

    fn values_over_z0(&self, zs: &[DenseVector], r: &[f64]) -> Vec<f64> {
        let l = self.assemble_l(r).expect("dimensions validated by the optimizer");
        zs.iter().map(|z| structured::value_from_factor(&l, z)).collect()
    }
}

impl SaddleObjective for UnstructuredSurrogate {
    fn z0_dim(&self) -> usize {
        self.n()
    }

    fn r_dim(&self) -> usize {
        self.m()
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64 {
        UnstructuredSurrogate::value(self, z0, r).expect("dimensions validated by the optimizer")
    }

    fn gradient(&self, z0: &[f64], r: &[f64]) -> Option<(DenseVector, DenseVector)> {
        UnstructuredSurrogate::gradient(self, z0, r).ok()
    }
}

impl SaddleObjective for Surrogate {
    fn z0_dim(&self) -> usize {
        self.n()
    }

    fn r_dim(&self) -> usize {
        self.m()
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64 {
        match self {
            Surrogate::Structured(s) => SaddleObjective::value(s, z0, r),
            Surrogate::Unstructured(s) => SaddleObjective::value(s, z0, r),
        }
    }

    fn gradient(&self, z0: &[f64], r: &[f64]) -> Option<(DenseVector, DenseVector)> {
        Surrogate::gradient(self, z0, r).ok()
    }

    fn values_over_z0(&self, zs: &[DenseVector], r: &[f64]) -> Vec<f64> {
        match self {
            Surrogate::Structured(s) => s.values_over_z0(zs, r),
            Surrogate::Unstructured(s) => s.values_over_z0(zs, r),
        }
    }
}
