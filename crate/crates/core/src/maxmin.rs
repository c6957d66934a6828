//! `max_{z0} min_{r} V(z0, r)` by projected gradient descent-ascent and by
//! consensus-based optimization for saddle points (CBO-SP).

use std::f64::consts::PI;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::DenseVector;
use crate::rng::{particle_rng, standard_normal};

#[derive(Debug, Error, PartialEq)]
pub enum MaxMinError {
    #[error("non-finite iterate at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },
    #[error("non-finite consensus weight")]
    NonFiniteWeight,
    #[error("objective has no gradient")]
    MissingGradient,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("history write failed: {0}")]
    Io(String),
}

/// Feasible set: `r ∈ [r_lb, r_ub]` and `‖z0‖ ≤ z0_radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub r_lb: DenseVector,
    pub r_ub: DenseVector,
    pub z0_radius: f64,
}

impl Bounds {
    /// `[0, π]^m` and the unit ball.
    pub fn actuator_box(m: usize) -> Self {
        Self {
            r_lb: DenseVector::zeros(m),
            r_ub: DenseVector::filled(m, PI),
            z0_radius: 1.0,
        }
    }
}

/// A function `V(z0, r)` to be maximized in `z0` and minimized in `r`.
///
/// Callers validate dimensions once up front, so implementations may panic on
/// inputs of the wrong length.
pub trait SaddleObjective {
    fn z0_dim(&self) -> usize;
    fn r_dim(&self) -> usize;

    fn bounds(&self) -> Bounds {
        Bounds::actuator_box(self.r_dim())
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64;

    /// `(∇_{z0} V, ∇_r V)` when available.
    fn gradient(&self, _z0: &[f64], _r: &[f64]) -> Option<(DenseVector, DenseVector)> {
        None
    }

    /// Values at many `z0` for one `r`; override when `r`-dependent work can be shared.
    fn values_over_z0(&self, zs: &[DenseVector], r: &[f64]) -> Vec<f64> {
        zs.iter().map(|z| self.value(z, r)).collect()
    }
}

type ValueFn = Box<dyn Fn(&[f64], &[f64]) -> f64>;
type GradFn = Box<dyn Fn(&[f64], &[f64]) -> (DenseVector, DenseVector)>;

/// Objective built from closures.
pub struct FnObjective {
    n: usize,
    m: usize,
    bounds: Bounds,
    eval: ValueFn,
    grad: Option<GradFn>,
}

impl FnObjective {
    pub fn new(n: usize, m: usize, eval: impl Fn(&[f64], &[f64]) -> f64 + 'static) -> Self {
        Self {
            n,
            m,
            bounds: Bounds::actuator_box(m),
            eval: Box::new(eval),
            grad: None,
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &[f64]) -> (DenseVector, DenseVector) + 'static) -> Self {
        self.grad = Some(Box::new(grad));
        self
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }
}

impl SaddleObjective for FnObjective {
    fn z0_dim(&self) -> usize {
        self.n
    }

    fn r_dim(&self) -> usize {
        self.m
    }

    fn bounds(&self) -> Bounds {
        self.bounds.clone()
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64 {
        (self.eval)(z0, r)
    }

    fn gradient(&self, z0: &[f64], r: &[f64]) -> Option<(DenseVector, DenseVector)> {
        self.grad.as_ref().map(|g| g(z0, r))
    }
}

pub fn project_ball(z: &[f64]) -> DenseVector {
    project_ball_radius(z, 1.0)
}

fn project_ball_radius(z: &[f64], radius: f64) -> DenseVector {
    let v = DenseVector::from(z);
    let norm = v.norm();
    if norm > radius {
        v.scaled(radius / norm)
    } else {
        v
    }
}

pub fn project_box(r: &[f64], lb: &[f64], ub: &[f64]) -> DenseVector {
    r.iter()
        .zip(lb.iter().zip(ub))
        .map(|(x, (l, u))| x.min(*u).max(*l))
        .collect()
}

fn check_dims(obj: &dyn SaddleObjective, z0: &[f64], r: &[f64]) -> Result<(), MaxMinError> {
    let b = obj.bounds();
    if z0.len() != obj.z0_dim() || r.len() != obj.r_dim() || b.r_lb.dim() != r.len() || b.r_ub.dim() != r.len() {
        return Err(MaxMinError::DimensionMismatch(format!(
            "objective expects z0 in R^{} and r in R^{}, got {} and {}",
            obj.z0_dim(),
            obj.r_dim(),
            z0.len(),
            r.len()
        )));
    }
    Ok(())
}

/// One row of an optimizer trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub r: DenseVector,
    pub z0: DenseVector,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub z0: DenseVector,
    pub r: DenseVector,
    pub value: f64,
    pub iterations: usize,
    pub history: Vec<HistoryRow>,
}

/// Writes `iter, consensus_r_1..m, consensus_z0_1..n, value`.
pub fn write_history_csv<W: Write>(history: &[HistoryRow], out: W) -> Result<(), MaxMinError> {
    let err = |e: csv::Error| MaxMinError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let (m, n) = history.first().map_or((0, 0), |h| (h.r.dim(), h.z0.dim()));
    let mut header = vec!["iter".to_string()];
    header.extend((1..=m).map(|l| format!("consensus_r_{l}")));
    header.extend((1..=n).map(|i| format!("consensus_z0_{i}")));
    header.push("value".into());
    w.write_record(&header).map_err(err)?;
    for row in history {
        let mut rec = vec![row.iteration.to_string()];
        rec.extend(row.r.iter().chain(row.z0.iter()).map(|v| format!("{v:.16e}")));
        rec.push(format!("{:.16e}", row.value));
        w.write_record(&rec).map_err(err)?;
    }
    w.flush().map_err(|e| MaxMinError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgdaConfig {
    #[serde(rename = "K")]
    pub iterations: usize,
    pub eta_r: f64,
    pub eta_z0: f64,
    pub z0_init: DenseVector,
    pub r_init: DenseVector,
}

impl PgdaConfig {
    /// K = 2000, η_r = 3e-4, η_z0 = 1e-3, z0 = (0.5, …), r = (2.5, …).
    pub fn reference(n: usize, m: usize) -> Self {
        Self {
            iterations: 2000,
            eta_r: 3e-4,
            eta_z0: 1e-3,
            z0_init: DenseVector::filled(n, 0.5),
            r_init: DenseVector::filled(m, 2.5),
        }
    }

    pub fn validate(&self) -> Result<(), MaxMinError> {
        if self.iterations == 0 {
            return Err(MaxMinError::InvalidConfig("K must be at least 1".into()));
        }
        if !(self.eta_r > 0.0 && self.eta_z0 > 0.0) {
            return Err(MaxMinError::InvalidConfig("step sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Projected gradient descent-ascent with simultaneous updates. The history
/// holds the initial point followed by each of the `K` iterates.
pub fn pgda(obj: &dyn SaddleObjective, cfg: &PgdaConfig) -> Result<SaddleSolution, MaxMinError> {
    cfg.validate()?;
    check_dims(obj, &cfg.z0_init, &cfg.r_init)?;
    let bounds = obj.bounds();
    let mut z = cfg.z0_init.clone();
    let mut r = cfg.r_init.clone();
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(HistoryRow {
        iteration: 0,
        value: obj.value(&z, &r),
        r: r.clone(),
        z0: z.clone(),
    });
    for k in 1..=cfg.iterations {
        let (gz, gr) = obj.gradient(&z, &r).ok_or(MaxMinError::MissingGradient)?;
        let z_step: Vec<f64> = z.iter().zip(gz.iter()).map(|(zi, g)| zi + cfg.eta_z0 * g).collect();
        let r_step: Vec<f64> = r.iter().zip(gr.iter()).map(|(ri, g)| ri - cfg.eta_r * g).collect();
        z = project_ball_radius(&z_step, bounds.z0_radius);
        r = project_box(&r_step, &bounds.r_lb, &bounds.r_ub);
        let value = obj.value(&z, &r);
        if !(z.is_finite() && r.is_finite() && value.is_finite()) {
            return Err(MaxMinError::NonFiniteIterate { iteration: k });
        }
        history.push(HistoryRow {
            iteration: k,
            r: r.clone(),
            z0: z.clone(),
            value,
        });
    }
    Ok(SaddleSolution {
        value: obj.value(&z, &r),
        z0: z,
        r,
        iterations: cfg.iterations,
        history,
    })
}

/// `V + μ(−|‖z0‖ − ρ| + Σ_l ([r_l − ub_l]₊ + [lb_l − r_l]₊))` with ρ the ball radius.
pub struct Penalized<'a> {
    inner: &'a dyn SaddleObjective,
    mu: f64,
    bounds: Bounds,
}

pub fn penalized_objective(obj: &dyn SaddleObjective, mu: f64) -> Penalized<'_> {
    Penalized {
        inner: obj,
        mu,
        bounds: obj.bounds(),
    }
}

impl Penalized<'_> {
    fn z0_penalty(&self, z0: &[f64]) -> f64 {
        let norm = z0.iter().map(|x| x * x).sum::<f64>().sqrt();
        -(norm - self.bounds.z0_radius).abs()
    }

    fn r_penalty(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(self.bounds.r_lb.iter().zip(self.bounds.r_ub.iter()))
            .map(|(x, (lb, ub))| (x - ub).max(0.0) + (lb - x).max(0.0))
            .sum()
    }
}

impl SaddleObjective for Penalized<'_> {
    fn z0_dim(&self) -> usize {
        self.inner.z0_dim()
    }

    fn r_dim(&self) -> usize {
        self.inner.r_dim()
    }

    fn bounds(&self) -> Bounds {
        self.bounds.clone()
    }

    fn value(&self, z0: &[f64], r: &[f64]) -> f64 {
        if self.mu == 0.0 {
            return self.inner.value(z0, r);
        }
        self.inner.value(z0, r) + self.mu * (self.z0_penalty(z0) + self.r_penalty(r))
    }

    fn values_over_z0(&self, zs: &[DenseVector], r: &[f64]) -> Vec<f64> {
        let base = self.inner.values_over_z0(zs, r);
        if self.mu == 0.0 {
            return base;
        }
        let rp = self.r_penalty(r);
        base.into_iter()
            .zip(zs)
            .map(|(v, z)| v + self.mu * (self.z0_penalty(z) + rp))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CboConfig {
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub dt: f64,
    /// Penalty weight; zero switches the penalty off.
    pub mu: f64,
    #[serde(rename = "K")]
    pub iterations: usize,
    pub init_mean_r: DenseVector,
    pub init_mean_z0: DenseVector,
    pub init_stddev: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub early_stop: bool,
}

pub const EARLY_STOP_TOL: f64 = 1e-8;
pub const EARLY_STOP_WINDOW: usize = 50;

impl CboConfig {
    /// α = β = 1e15, λ1 = 2, λ2 = 0.1, σ1 = σ2 = 2, μ = 1e4, N1 = N2 = 300,
    /// K = 2000, stddev² = 1.5, Δt = 0.01, means (0.5, …) and (2.5, …).
    pub fn reference(n: usize, m: usize, seed: u64) -> Self {
        Self {
            n1: 300,
            n2: 300,
            lambda1: 2.0,
            lambda2: 0.1,
            sigma1: 2.0,
            sigma2: 2.0,
            alpha: 1e15,
            beta: 1e15,
            dt: 0.01,
            mu: 1e4,
            iterations: 2000,
            init_mean_r: DenseVector::filled(m, 2.5),
            init_mean_z0: DenseVector::filled(n, 0.5),
            init_stddev: 1.5f64.sqrt(),
            seed,
            early_stop: false,
        }
    }

    pub fn validate(&self) -> Result<(), MaxMinError> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("dt", self.dt),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MaxMinError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let nonnegative = [
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("mu", self.mu),
            ("init_stddev", self.init_stddev),
        ];
        for (name, v) in nonnegative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MaxMinError::InvalidConfig(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.n1 == 0 || self.n2 == 0 || self.iterations == 0 {
            return Err(MaxMinError::InvalidConfig("N1, N2 and K must be at least 1".into()));
        }
        Ok(())
    }
}

/// Particle positions, consensus points and one noise stream per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsembles {
    pub r_particles: Vec<DenseVector>,
    pub z0_particles: Vec<DenseVector>,
    pub consensus_r: DenseVector,
    pub consensus_z0: DenseVector,
    r_streams: Vec<ChaCha8Rng>,
    z0_streams: Vec<ChaCha8Rng>,
}

const R_ENSEMBLE: u32 = 0;
const Z0_ENSEMBLE: u32 = 1;

impl ParticleEnsembles {
    /// Draws `N(mean, stddev² I)` particles; consensus points start at the means.
    pub fn sample(cfg: &CboConfig) -> Self {
        let draw = |ensemble: u32, count: usize, mean: &DenseVector| {
            let mut streams = Vec::with_capacity(count);
            let mut particles = Vec::with_capacity(count);
            for i in 0..count {
                let mut rng = particle_rng(cfg.seed, ensemble, i as u32);
                particles.push(mean.iter().map(|mu| mu + cfg.init_stddev * standard_normal(&mut rng)).collect());
                streams.push(rng);
            }
            (particles, streams)
        };
        let (r_particles, r_streams) = draw(R_ENSEMBLE, cfg.n1, &cfg.init_mean_r);
        let (z0_particles, z0_streams) = draw(Z0_ENSEMBLE, cfg.n2, &cfg.init_mean_z0);
        Self {
            r_particles,
            z0_particles,
            consensus_r: cfg.init_mean_r.clone(),
            consensus_z0: cfg.init_mean_z0.clone(),
            r_streams,
            z0_streams,
        }
    }

    /// Ensembles at given positions with noise streams seeded from `seed`.
    pub fn from_particles(r_particles: Vec<DenseVector>, z0_particles: Vec<DenseVector>, seed: u64) -> Self {
        let r_streams = (0..r_particles.len()).map(|i| particle_rng(seed, R_ENSEMBLE, i as u32)).collect();
        let z0_streams = (0..z0_particles.len()).map(|i| particle_rng(seed, Z0_ENSEMBLE, i as u32)).collect();
        Self {
            consensus_r: mean(&r_particles),
            consensus_z0: mean(&z0_particles),
            r_particles,
            z0_particles,
            r_streams,
            z0_streams,
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mean(points: &[DenseVector]) -> DenseVector {
    let dim = points.first().map_or(0, |p| p.dim());
    let mut acc = vec![0.0; dim];
    for p in points {
        for (a, x) in acc.iter_mut().zip(p.iter()) {
            *a += x;
        }
    }
    let count = points.len().max(1) as f64;
    acc.into_iter().map(|a| a / count).collect()
}

/// Weighted average with weights `exp(scale · (v_i − v*))`, `v*` the extremum
/// that makes every exponent nonpositive.
fn weighted_consensus(points: &[DenseVector], values: &[f64], scale: f64) -> Result<DenseVector, MaxMinError> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(MaxMinError::NonFiniteWeight);
    }
    let shift = if scale < 0.0 {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    if !shift.is_finite() {
        return Err(MaxMinError::NonFiniteWeight);
    }
    let dim = points[0].dim();
    let mut acc = vec![0.0; dim];
    let mut total = 0.0;
    for (p, v) in points.iter().zip(values) {
        let w = (scale * (v - shift)).exp();
        if w == 0.0 {
            continue;
        }
        total += w;
        for (a, x) in acc.iter_mut().zip(p.iter()) {
            *a += w * x;
        }
    }
    if !(total > 0.0 && total.is_finite()) {
        return Err(MaxMinError::NonFiniteWeight);
    }
    Ok(acc.into_iter().map(|a| a / total).collect())
}

/// Consensus points `(consensus_r, consensus_z0)` of the current ensembles.
pub fn consensus_points(
    ens: &ParticleEnsembles,
    obj: &dyn SaddleObjective,
    alpha: f64,
    beta: f64,
) -> Result<(DenseVector, DenseVector), MaxMinError> {
    if ens.r_particles.is_empty() || ens.z0_particles.is_empty() {
        return Err(MaxMinError::InvalidConfig("ensembles must be nonempty".into()));
    }
    let z_bar = mean(&ens.z0_particles);
    let r_bar = mean(&ens.r_particles);
    let r_values: Vec<f64> = ens.r_particles.iter().map(|r| obj.value(&z_bar, r)).collect();
    let z_values = obj.values_over_z0(&ens.z0_particles, &r_bar);
    let consensus_r = weighted_consensus(&ens.r_particles, &r_values, -alpha)?;
    let consensus_z0 = weighted_consensus(&ens.z0_particles, &z_values, beta)?;
    Ok((consensus_r, consensus_z0))
}

fn drift_diffuse(particles: &mut [DenseVector], streams: &mut [ChaCha8Rng], target: &[f64], lambda: f64, sigma: f64, dt: f64) {
    let sqrt_dt = dt.sqrt();
    for (p, rng) in particles.iter_mut().zip(streams.iter_mut()) {
        for (x, c) in p.iter_mut().zip(target) {
            let nu = *x - c;
            let dw = sqrt_dt * standard_normal(rng);
            *x += -lambda * dt * nu + sigma * nu * dw;
        }
    }
}

/// One Euler–Maruyama step of both ensembles toward the current consensus
/// points, followed by recomputing the consensus points. `obj` should already
/// carry any penalty.
pub fn cbo_sp_step(
    ens: &mut ParticleEnsembles,
    obj: &dyn SaddleObjective,
    cfg: &CboConfig,
    iteration: usize,
) -> Result<(), MaxMinError> {
    let target_r = ens.consensus_r.clone();
    let target_z = ens.consensus_z0.clone();
    drift_diffuse(&mut ens.r_particles, &mut ens.r_streams, &target_r, cfg.lambda1, cfg.sigma1, cfg.dt);
    drift_diffuse(&mut ens.z0_particles, &mut ens.z0_streams, &target_z, cfg.lambda2, cfg.sigma2, cfg.dt);
    if !ens.r_particles.iter().chain(&ens.z0_particles).all(|p| p.is_finite()) {
        return Err(MaxMinError::NonFiniteIterate { iteration });
    }
    let (cr, cz) = consensus_points(ens, obj, cfg.alpha, cfg.beta)?;
    ens.consensus_r = cr;
    ens.consensus_z0 = cz;
    Ok(())
}

/// CBO-SP on the penalized objective. The history holds the consensus pair
/// after initialization and after every step, valued on the unpenalized `obj`.
pub fn cbo_sp(obj: &dyn SaddleObjective, cfg: &CboConfig) -> Result<SaddleSolution, MaxMinError> {
    cfg.validate()?;
    check_dims(obj, &cfg.init_mean_z0, &cfg.init_mean_r)?;
    let penalized = penalized_objective(obj, cfg.mu);
    let mut ens = ParticleEnsembles::sample(cfg);
    let (cr, cz) = consensus_points(&ens, &penalized, cfg.alpha, cfg.beta)?;
    ens.consensus_r = cr;
    ens.consensus_z0 = cz;

    let row = |k: usize, ens: &ParticleEnsembles| HistoryRow {
        iteration: k,
        r: ens.consensus_r.clone(),
        z0: ens.consensus_z0.clone(),
        value: obj.value(&ens.consensus_z0, &ens.consensus_r),
    };
    let mut history = vec![row(0, &ens)];
    let mut still = 0;
    let mut done = cfg.iterations;
    for k in 1..=cfg.iterations {
        let prev_r = ens.consensus_r.clone();
        let prev_z = ens.consensus_z0.clone();
        cbo_sp_step(&mut ens, &penalized, cfg, k)?;
        history.push(row(k, &ens));
        if cfg.early_stop {
            let moved_r = distance(&ens.consensus_r, &prev_r);
            let moved_z = distance(&ens.consensus_z0, &prev_z);
            still = if moved_r < EARLY_STOP_TOL && moved_z < EARLY_STOP_TOL { still + 1 } else { 0 };
            if still >= EARLY_STOP_WINDOW {
                done = k;
                break;
            }
        }
    }
    Ok(SaddleSolution {
        value: obj.value(&ens.consensus_z0, &ens.consensus_r),
        z0: ens.consensus_z0,
        r: ens.consensus_r,
        iterations: done,
        history,
    })
}
