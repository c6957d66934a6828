//! Galerkin semi-discretization of the controlled heat equation on [0, π]
//! over the sine basis φ_i(x) = sin(i x).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{DenseMatrix, DenseVector};

pub const DOMAIN_LB: f64 = 0.0;
pub const DOMAIN_UB: f64 = PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("actuator {index} location {value} lies outside [0, π]")]
    OutOfDomain { index: usize, value: f64 },
    #[error("expected {expected} actuator locations, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

fn default_stable_sign() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatModelConfig {
    /// Number of sine modes.
    pub n: usize,
    /// Number of actuator patches.
    pub m: usize,
    /// Patch half-width factor; each patch covers [r − δπ, r + δπ].
    pub delta: f64,
    /// `true` selects A = −M⁻¹K; `false` the anti-stable A = K M⁻¹.
    #[serde(default = "default_stable_sign")]
    pub stable_sign: bool,
}

impl HeatModelConfig {
    pub fn new(n: usize, m: usize, delta: f64) -> Self {
        Self {
            n,
            m,
            delta,
            stable_sign: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n == 0 {
            return Err(ModelError::InvalidConfig("n must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(ModelError::InvalidConfig("m must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(ModelError::InvalidConfig(format!(
                "delta must lie in (0, 1/2), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// K_ij = ∫ φ'_i φ'_j dx = diag(i² π/2).
pub fn stiffness_matrix(n: usize) -> DenseMatrix {
    let diag: Vec<f64> = (1..=n).map(|i| (i * i) as f64 * PI / 2.0).collect();
    DenseMatrix::from_diag(&diag)
}

/// M_ij = ∫ φ_i φ_j dx = (π/2) I.
pub fn mass_matrix(n: usize) -> DenseMatrix {
    DenseMatrix::identity(n).scaled(PI / 2.0)
}

/// B(r)_{iℓ} = ∫_{r_ℓ−δπ}^{r_ℓ+δπ} sin(i x) dx = (2/i) sin(i r_ℓ) sin(i δ π).
///
/// The formal bounds are used even when a patch overhangs the domain ends,
/// so B vanishes identically at r_ℓ = 0 and r_ℓ = π.
pub fn input_matrix(r: &[f64], cfg: &HeatModelConfig) -> Result<DenseMatrix, ModelError> {
    if r.len() != cfg.m {
        return Err(ModelError::DimensionMismatch {
            expected: cfg.m,
            got: r.len(),
        });
    }
    for (index, &value) in r.iter().enumerate() {
        if !(DOMAIN_LB..=DOMAIN_UB).contains(&value) {
            return Err(ModelError::OutOfDomain { index, value });
        }
    }
    Ok(DenseMatrix::from_fn(cfg.n, cfg.m, |i, l| {
        let k = (i + 1) as f64;
        2.0 / k * (k * r[l]).sin() * (k * cfg.delta * PI).sin()
    }))
}

/// The assembled parametric plant (A, B(·), Q, R).
#[derive(Debug, Clone)]
pub struct LtiSystem {
    pub a: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
    cfg: HeatModelConfig,
}

impl LtiSystem {
    pub fn config(&self) -> &HeatModelConfig {
        &self.cfg
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn m(&self) -> usize {
        self.cfg.m
    }

    pub fn input_matrix(&self, r: &[f64]) -> Result<DenseMatrix, ModelError> {
        input_matrix(r, &self.cfg)
    }

    /// Eigenvalues of A. A is diagonal for this basis, so these are its diagonal
    /// entries, sorted descending.
    pub fn a_eigenvalues(&self) -> DenseVector {
        let mut d = self.a.diagonal().into_inner();
        d.sort_by(|x, y| y.total_cmp(x));
        d.into()
    }
}

pub fn assemble_system(cfg: &HeatModelConfig) -> Result<LtiSystem, ModelError> {
    cfg.validate()?;
    let k = stiffness_matrix(cfg.n);
    let mass = mass_matrix(cfg.n);
    // M is a scaled identity, so M⁻¹K = K M⁻¹ is the entrywise ratio of diagonals
    let sign = if cfg.stable_sign { -1.0 } else { 1.0 };
    let a = DenseMatrix::from_fn(cfg.n, cfg.n, |i, j| {
        if i == j {
            sign * k[(i, i)] / mass[(i, i)]
        } else {
            0.0
        }
    });
    Ok(LtiSystem {
        a,
        q: mass,
        r: DenseMatrix::identity(cfg.m),
        cfg: cfg.clone(),
    })
}
