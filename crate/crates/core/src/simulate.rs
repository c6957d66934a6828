//! Closed-loop simulation `ż = (A − B K) z`, `u = −K z`, by classical RK4.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{DenseMatrix, DenseVector, NumError};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("non-finite state at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error("trajectory write failed: {0}")]
    Io(String),
}

fn default_t_final() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_final: default_t_final(),
            dt: default_dt(),
            record_every: default_record_every(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt <= self.t_final && self.t_final.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "need 0 < dt <= t_final, got dt = {}, t_final = {}",
                self.dt, self.t_final
            )));
        }
        if self.record_every == 0 {
            return Err(SimError::InvalidConfig("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Step count; the step is shrunk to `t_final / steps` when `dt` does not divide `t_final`.
    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DenseVector>,
    pub controls: Vec<DenseVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `‖z‖₂` at the recorded time nearest to `t`.
    pub fn norm_near(&self, t: f64) -> f64 {
        let k = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map_or(0, |(k, _)| k);
        self.states[k].norm()
    }

    /// Writes `t, z_1..z_n, u_1..u_m`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SimError> {
        let err = |e: csv::Error| SimError::Io(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        let n = self.states.first().map_or(0, |z| z.dim());
        let m = self.controls.first().map_or(0, |u| u.dim());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("z_{i}")));
        header.extend((1..=m).map(|l| format!("u_{l}")));
        w.write_record(&header).map_err(err)?;
        for ((t, z), u) in self.times.iter().zip(&self.states).zip(&self.controls) {
            let row: Vec<String> = std::iter::once(t)
                .chain(z.iter())
                .chain(u.iter())
                .map(|v| format!("{v:.16e}"))
                .collect();
            w.write_record(&row).map_err(err)?;
        }
        w.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}

pub fn simulate_closed_loop(
    a: &DenseMatrix,
    b: &DenseMatrix,
    k_fb: &DenseMatrix,
    z0: &[f64],
    cfg: &SimConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    let n = a.rows();
    if !a.is_square() || b.rows() != n || k_fb.rows() != b.cols() || k_fb.cols() != n || z0.len() != n {
        return Err(NumError::DimensionMismatch(format!(
            "A {}x{}, B {}x{}, K {}x{}, z0 of length {}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            k_fb.rows(),
            k_fb.cols(),
            z0.len()
        ))
        .into());
    }
    let closed = a.sub(&b.matmul(k_fb)?)?;
    let field = |z: &DenseVector| closed.mat_vec(z).expect("square closed-loop matrix");
    let control = |z: &DenseVector| k_fb.mat_vec(z).expect("checked dimensions").scaled(-1.0);

    let steps = cfg.steps();
    let h = cfg.t_final / steps as f64;
    let mut z = DenseVector::from(z0);
    let mut traj = Trajectory {
        times: vec![0.0],
        controls: vec![control(&z)],
        states: vec![z.clone()],
    };
    let axpy = |x: &DenseVector, s: f64, y: &DenseVector| -> DenseVector { x.iter().zip(y.iter()).map(|(a, b)| a + s * b).collect() };
    for step in 1..=steps {
        let k1 = field(&z);
        let k2 = field(&axpy(&z, 0.5 * h, &k1));
        let k3 = field(&axpy(&z, 0.5 * h, &k2));
        let k4 = field(&axpy(&z, h, &k3));
        z = z
            .iter()
            .enumerate()
            .map(|(i, zi)| zi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let t = if step == steps { cfg.t_final } else { step as f64 * h };
        if !z.is_finite() {
            return Err(SimError::NonFiniteState { time: t });
        }
        if step % cfg.record_every == 0 || step == steps {
            traj.times.push(t);
            traj.controls.push(control(&z));
            traj.states.push(z.clone());
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlingMetrics {
    pub settle_time: Option<f64>,
    /// `(t, ‖z(t)‖₂)` at every recorded time.
    pub norms: Vec<(f64, f64)>,
}

/// First recorded time from which `‖z‖₂` stays below `threshold` to the end.
pub fn settling_metrics(traj: &Trajectory, threshold: f64) -> SettlingMetrics {
    let norms: Vec<(f64, f64)> = traj.times.iter().zip(&traj.states).map(|(t, z)| (*t, z.norm())).collect();
    let mut settle_time = None;
    for &(t, norm) in norms.iter().rev() {
        if norm < threshold {
            settle_time = Some(t);
        } else {
            break;
        }
    }
    SettlingMetrics { settle_time, norms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::closed_loop_lyapunov;
    use proptest::prelude::*;

    fn scalar(a: f64) -> DenseMatrix {
        DenseMatrix::from_diag(&[a])
    }

    fn exp_decay(dt: f64) -> f64 {
        let cfg = SimConfig { t_final: 1.0, dt, record_every: 1 };
        let traj = simulate_closed_loop(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &[1.0], &cfg).unwrap();
        traj.states.last().unwrap()[0]
    }

    #[test]
    fn scalar_exponential() {
        assert!((exp_decay(1e-3) - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let exact = (-1.0f64).exp();
        let coarse = (exp_decay(0.1) - exact).abs();
        let fine = (exp_decay(0.05) - exact).abs();
        let ratio = coarse / fine;
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn cancelled_dynamics_are_constant() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]);
        let b = DenseMatrix::identity(2);
        let traj = simulate_closed_loop(&a, &b, &a, &[0.3, -0.7], &SimConfig::default()).unwrap();
        assert!(traj.states.iter().all(|z| z[..] == [0.3, -0.7]));
    }

    #[test]
    fn records_every_kth_step_and_final() {
        let cfg = SimConfig { t_final: 1.0, dt: 0.1, record_every: 3 };
        let traj = simulate_closed_loop(&scalar(-1.0), &scalar(1.0), &scalar(2.0), &[1.0], &cfg).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!((traj.times[1] - 0.3).abs() < 1e-12);
        assert_eq!(traj.controls[2][0], -2.0 * traj.states[2][0]);
    }

    #[test]
    fn invalid_inputs() {
        let bad = SimConfig { t_final: 1.0, dt: 2.0, record_every: 1 };
        assert!(simulate_closed_loop(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &[1.0], &bad).is_err());
        assert!(simulate_closed_loop(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &[1.0, 2.0], &SimConfig::default()).is_err());
        let cfg = SimConfig { t_final: 100.0, dt: 1.0, record_every: 1 };
        assert!(matches!(
            simulate_closed_loop(&scalar(1e3), &scalar(1.0), &scalar(0.0), &[1.0], &cfg),
            Err(SimError::NonFiniteState { .. })
        ));
    }

    #[test]
    fn settling_examples() {
        let zero = Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![DenseVector::zeros(2); 3],
            controls: vec![DenseVector::zeros(1); 3],
        };
        assert_eq!(settling_metrics(&zero, 0.1).settle_time, Some(0.0));

        let cfg = SimConfig { t_final: 1.0, dt: 1e-3, record_every: 10 };
        let traj = simulate_closed_loop(&scalar(-1.0), &scalar(1.0), &scalar(0.0), &[1.0], &cfg).unwrap();
        let t = settling_metrics(&traj, 0.5).settle_time.unwrap();
        assert!((t - 2f64.ln()).abs() <= 1e-2, "{t}");

        let grow = simulate_closed_loop(&scalar(1.0), &scalar(1.0), &scalar(0.0), &[1.0], &cfg).unwrap();
        assert_eq!(settling_metrics(&grow, 0.5).settle_time, None);
    }

    #[test]
    fn csv_header() {
        let traj = simulate_closed_loop(
            &DenseMatrix::from_diag(&[-1.0, -4.0]),
            &DenseMatrix::from_rows(&[vec![1.0], vec![0.5]]),
            &DenseMatrix::from_rows(&[vec![0.2, 0.1]]),
            &[1.0, 1.0],
            &SimConfig { t_final: 0.1, dt: 0.05, record_every: 1 },
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,z_1,z_2,u_1");
        assert_eq!(text.lines().count(), 4);
    }

    proptest! {
        #[test]
        fn lyapunov_function_decreases(
            d in prop::collection::vec(0.2f64..5.0, 3),
            bvals in prop::collection::vec(-1.0f64..1.0, 3),
            kvals in prop::collection::vec(0.0f64..1.0, 3),
            z in prop::collection::vec(-1.0f64..1.0, 3),
        ) {
            let a = DenseMatrix::from_diag(&d.iter().map(|x| -x).collect::<Vec<_>>());
            let b = DenseMatrix::from_row_major(3, 1, bvals.clone()).unwrap();
            // K = c Bᵀ with c ≥ 0 keeps A − BK symmetric negative definite
            let c = kvals[0];
            let k = b.transpose().scaled(c);
            let x = closed_loop_lyapunov(&a, &b, &k).expect("Hurwitz closed loop");
            let cfg = SimConfig { t_final: 2.0, dt: 1e-2, record_every: 5 };
            let traj = simulate_closed_loop(&a, &b, &k, &z, &cfg).unwrap();
            let energy: Vec<f64> = traj.states.iter().map(|s| x.quad_form(s).unwrap()).collect();
            for w in energy.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-6);
            }
        }
    }
}
