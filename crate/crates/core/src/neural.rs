//! One-hidden-layer perceptron with analytic gradients, and Adam.
//!
//! `f(x) = w2ᵀ act(W1 x + b1) + b2`. The architecture is fixed, so
//! backpropagation is written out by hand rather than going through a
//! general autodiff engine.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkit::{DenseMatrix, DenseVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("input has dimension {got}, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Softplus,
}

/// ln(1 + eᵗ) without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Logistic sigmoid, the derivative of softplus.
#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Softplus => softplus(t),
        }
    }

    /// Derivative; relu′(0) is taken to be 0.
    #[inline]
    pub fn derivative(self, t: f64) -> f64 {
        match self {
            Activation::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlpRecord", into = "MlpRecord")]
pub struct Mlp {
    input_dim: usize,
    hidden_width: usize,
    /// hidden_width × input_dim
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub activation: Activation,
}

/// On-disk form of [`Mlp`]; `W1` is row-major.
#[derive(Serialize, Deserialize)]
struct MlpRecord {
    input_dim: usize,
    hidden_width: usize,
    activation: Activation,
    #[serde(rename = "W1")]
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = NeuralError;

    fn try_from(rec: MlpRecord) -> Result<Self, Self::Error> {
        if rec.input_dim == 0 || rec.hidden_width == 0 {
            return Err(NeuralError::ShapeMismatch("empty layer".into()));
        }
        let w1 = DenseMatrix::from_row_major(rec.hidden_width, rec.input_dim, rec.w1)
            .map_err(|e| NeuralError::ShapeMismatch(format!("W1: {e}")))?;
        if rec.b1.len() != rec.hidden_width || rec.w2.len() != rec.hidden_width {
            return Err(NeuralError::ShapeMismatch(format!(
                "b1 has {} entries and w2 has {}, hidden width is {}",
                rec.b1.len(),
                rec.w2.len(),
                rec.hidden_width
            )));
        }
        let all_finite = w1.is_finite()
            && rec.b1.iter().chain(&rec.w2).all(|v| v.is_finite())
            && rec.b2.is_finite();
        if !all_finite {
            return Err(NeuralError::ShapeMismatch("non-finite parameter".into()));
        }
        Ok(Mlp {
            input_dim: rec.input_dim,
            hidden_width: rec.hidden_width,
            w1,
            b1: rec.b1,
            w2: rec.w2,
            b2: rec.b2,
            activation: rec.activation,
        })
    }
}

impl From<Mlp> for MlpRecord {
    fn from(net: Mlp) -> Self {
        MlpRecord {
            input_dim: net.input_dim,
            hidden_width: net.hidden_width,
            activation: net.activation,
            w1: net.w1.as_slice().to_vec(),
            b1: net.b1,
            w2: net.w2,
            b2: net.b2,
        }
    }
}

/// Parameter gradient with the same shapes as [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    pub w1: DenseMatrix,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpGrad {
    /// Flattened in the same order as [`Mlp::params`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.w1.as_slice().len() + 2 * self.b1.len() + 1);
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out
    }
}

impl Mlp {
    pub fn zeros(input_dim: usize, hidden_width: usize, activation: Activation) -> Self {
        Self {
            input_dim,
            hidden_width,
            w1: DenseMatrix::zeros(hidden_width, input_dim),
            b1: vec![0.0; hidden_width],
            w2: vec![0.0; hidden_width],
            b2: 0.0,
            activation,
        }
    }

    /// Fan-in uniform initialization: each layer draws from U(−1/√fan_in, 1/√fan_in).
    pub fn init<R: Rng + ?Sized>(
        input_dim: usize,
        hidden_width: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let mut net = Self::zeros(input_dim, hidden_width, activation);
        let bound1 = 1.0 / (input_dim as f64).sqrt();
        for v in net.w1.as_mut_slice().iter_mut().chain(net.b1.iter_mut()) {
            *v = rng.gen_range(-bound1..=bound1);
        }
        let bound2 = 1.0 / (hidden_width as f64).sqrt();
        for v in net.w2.iter_mut() {
            *v = rng.gen_range(-bound2..=bound2);
        }
        net.b2 = rng.gen_range(-bound2..=bound2);
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    pub fn num_params(&self) -> usize {
        self.hidden_width * (self.input_dim + 2) + 1
    }

    fn check_input(&self, x: &[f64]) -> Result<(), NeuralError> {
        if x.len() != self.input_dim {
            return Err(NeuralError::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn pre_activation(&self, k: usize, x: &[f64]) -> f64 {
        let row = self.w1.row(k);
        let mut s = self.b1[k];
        for (w, xi) in row.iter().zip(x) {
            s += w * xi;
        }
        s
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64, NeuralError> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut out = self.b2;
        for k in 0..self.hidden_width {
            out += self.w2[k] * self.activation.apply(self.pre_activation(k, x));
        }
        out
    }

    /// Gradient of `upstream · f(x)` with respect to every parameter.
    pub fn grad_params(&self, x: &[f64], upstream: f64) -> Result<MlpGrad, NeuralError> {
        self.check_input(x)?;
        let mut flat = vec![0.0; self.num_params()];
        self.accumulate_grad_params(x, upstream, &mut flat);
        let (w1, rest) = flat.split_at(self.hidden_width * self.input_dim);
        let (b1, rest) = rest.split_at(self.hidden_width);
        let (w2, b2) = rest.split_at(self.hidden_width);
        Ok(MlpGrad {
            w1: DenseMatrix::from_row_major(self.hidden_width, self.input_dim, w1.to_vec())
                .expect("shape follows the network"),
            b1: b1.to_vec(),
            w2: w2.to_vec(),
            b2: b2[0],
        })
    }

    /// Adds `upstream · ∂f(x)/∂θ` into a flat buffer laid out like [`Mlp::params`].
    pub(crate) fn accumulate_grad_params(&self, x: &[f64], upstream: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.num_params());
        let h = self.hidden_width;
        let d = self.input_dim;
        let (g_w1, rest) = grad.split_at_mut(h * d);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(h);
        if upstream == 0.0 {
            return;
        }
        for k in 0..h {
            let a = self.pre_activation(k, x);
            g_w2[k] += upstream * self.activation.apply(a);
            let delta = upstream * self.w2[k] * self.activation.derivative(a);
            if delta != 0.0 {
                g_b1[k] += delta;
                for (g, xi) in g_w1[k * d..(k + 1) * d].iter_mut().zip(x) {
                    *g += delta * xi;
                }
            }
        }
        g_b2[0] += upstream;
    }

    /// ∂f/∂x = W1ᵀ (act′(W1 x + b1) ⊙ w2).
    pub fn grad_input(&self, x: &[f64]) -> Result<DenseVector, NeuralError> {
        self.check_input(x)?;
        let mut g = DenseVector::zeros(self.input_dim);
        self.accumulate_grad_input(x, 1.0, &mut g);
        Ok(g)
    }

    /// Value and input gradient in one pass.
    pub(crate) fn value_and_grad_input(&self, x: &[f64]) -> (f64, DenseVector) {
        let mut g = DenseVector::zeros(self.input_dim);
        let mut out = self.b2;
        for k in 0..self.hidden_width {
            let a = self.pre_activation(k, x);
            out += self.w2[k] * self.activation.apply(a);
            let delta = self.w2[k] * self.activation.derivative(a);
            if delta != 0.0 {
                for (gi, w) in g.iter_mut().zip(self.w1.row(k)) {
                    *gi += delta * w;
                }
            }
        }
        (out, g)
    }

    fn accumulate_grad_input(&self, x: &[f64], scale: f64, g: &mut [f64]) {
        for k in 0..self.hidden_width {
            let delta = scale * self.w2[k] * self.activation.derivative(self.pre_activation(k, x));
            if delta != 0.0 {
                for (gi, w) in g.iter_mut().zip(self.w1.row(k)) {
                    *gi += delta * w;
                }
            }
        }
    }

    /// Parameters flattened as W1 (row-major), b1, w2, b2.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        out.extend_from_slice(self.w1.as_slice());
        out.extend_from_slice(&self.b1);
        out.extend_from_slice(&self.w2);
        out.push(self.b2);
        out
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), NeuralError> {
        if flat.len() != self.num_params() {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let (w1, rest) = flat.split_at(self.hidden_width * self.input_dim);
        let (b1, rest) = rest.split_at(self.hidden_width);
        let (w2, b2) = rest.split_at(self.hidden_width);
        self.w1.as_mut_slice().copy_from_slice(w1);
        self.b1.copy_from_slice(b1);
        self.w2.copy_from_slice(w2);
        self.b2 = b2[0];
        Ok(())
    }

    /// Applies one Adam update from a flat gradient.
    pub fn adam_update(&mut self, state: &mut AdamState, grad: &[f64]) -> Result<(), NeuralError> {
        let mut params = self.params();
        state.step(&mut params, grad)?;
        self.set_params(&params)
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments and hyperparameters for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            learning_rate,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
        }
    }

    /// One bias-corrected Adam step, in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(NeuralError::ShapeMismatch(format!(
                "{} params, {} grads, state sized for {}",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Relative error with a small absolute floor for near-zero coordinates.
    pub(crate) fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
    }

    /// A network with O(1) weights so finite differences see real curvature.
    pub(crate) fn random_net(rng: &mut ChaCha8Rng, input: usize, hidden: usize, act: Activation) -> Mlp {
        let mut net = Mlp::zeros(input, hidden, act);
        let params: Vec<f64> = (0..net.num_params()).map(|_| rng.gen_range(-1.5..1.5)).collect();
        net.set_params(&params).unwrap();
        net
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn forward_examples() {
        let net = Mlp::zeros(3, 4, Activation::Relu);
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), 0.0);

        let mut net = Mlp::zeros(1, 2, Activation::Relu);
        net.b1 = vec![-1.0, 2.0];
        net.w2 = vec![1.0, 1.0];
        assert_eq!(net.forward(&[0.0]).unwrap(), 2.0);

        let mut net = Mlp::zeros(2, 3, Activation::Softplus);
        net.w2 = vec![1.0; 3];
        let v = net.forward(&[0.4, -0.2]).unwrap();
        assert!((v - 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((softplus(0.0) - 0.6931472).abs() < 1e-7);
    }

    #[test]
    fn softplus_is_overflow_safe() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let net = Mlp::zeros(2, 3, Activation::Relu);
        let err = NeuralError::DimensionMismatch { expected: 2, got: 3 };
        assert_eq!(net.forward(&[0.0; 3]).unwrap_err(), err);
        assert_eq!(net.grad_input(&[0.0; 3]).unwrap_err(), err);
        assert_eq!(net.grad_params(&[0.0; 3], 1.0).unwrap_err(), err);
    }

    #[test]
    fn grad_params_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_net(&mut rng, 3, 8, Activation::Softplus);
        let g = net.grad_params(&[0.1, 0.2, 0.3], 0.0).unwrap();
        assert!(g.to_flat().iter().all(|v| *v == 0.0));
        let g = net.grad_params(&[0.1, 0.2, 0.3], -2.5).unwrap();
        assert_eq!(g.b2, -2.5);
    }

    #[test]
    fn grad_params_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-6;
        for _ in 0..100 {
            let net = random_net(&mut rng, 3, 6, Activation::Softplus);
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let upstream = rng.gen_range(-2.0..2.0);
            let analytic = net.grad_params(&x, upstream).unwrap().to_flat();
            let base = net.params();
            for (idx, a) in analytic.iter().enumerate() {
                let mut plus = net.clone();
                let mut p = base.clone();
                p[idx] += h;
                plus.set_params(&p).unwrap();
                let mut minus = net.clone();
                p[idx] -= 2.0 * h;
                minus.set_params(&p).unwrap();
                let fd = upstream * (plus.forward(&x).unwrap() - minus.forward(&x).unwrap()) / (2.0 * h);
                assert!(rel_err(*a, fd) < 1e-6, "param {idx}: {a} vs {fd}");
            }
        }
    }

    #[test]
    fn grad_input_cases() {
        let net = Mlp::zeros(3, 5, Activation::Softplus);
        assert!(net.grad_input(&[1.0, 2.0, 3.0]).unwrap().iter().all(|v| *v == 0.0));

        // every relu unit active: gradient is exactly W1ᵀ w2
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = random_net(&mut rng, 2, 4, Activation::Relu);
        net.b1 = vec![100.0; 4];
        let g = net.grad_input(&[0.3, -0.1]).unwrap();
        let expected = net.w1.transpose().mat_vec(&net.w2).unwrap();
        assert_eq!(g, expected);

        for _ in 0..100 {
            let net = random_net(&mut rng, 4, 7, Activation::Softplus);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let g = net.grad_input(&x).unwrap();
            let (v, g2) = net.value_and_grad_input(&x);
            assert_eq!(g, g2);
            assert_eq!(v, net.forward(&x).unwrap());
            for i in 0..4 {
                let mut xp = x.clone();
                xp[i] += 1e-6;
                let mut xm = x.clone();
                xm[i] -= 1e-6;
                let fd = (net.forward(&xp).unwrap() - net.forward(&xm).unwrap()) / 2e-6;
                assert!(rel_err(g[i], fd) < 1e-6);
            }
        }
    }

    #[test]
    fn forward_is_lipschitz() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for act in [Activation::Relu, Activation::Softplus] {
            for _ in 0..200 {
                let net = random_net(&mut rng, 3, 5, act);
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let y: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let w2 = net.w2.iter().map(|v| v * v).sum::<f64>().sqrt();
                let w1 = crate::numkit::frobenius_norm(&net.w1);
                let diff = (net.forward(&x).unwrap() - net.forward(&y).unwrap()).abs();
                assert!(diff <= w2 * w1 * dist + 1e-12);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_is_identity() {
        let mut state = AdamState::new(3, 1e-3);
        let mut p = vec![1.0, -2.0, 3.0];
        state.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let mut state = AdamState::new(4, 1e-3);
        let g = [1e-3, -0.5, 20.0, -1e-3];
        let mut p = vec![0.0; 4];
        state.step(&mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(&g) {
            assert!((pi + 1e-3 * gi.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn adam_lr_zero_and_shape_errors() {
        let mut state = AdamState::new(2, 0.0);
        let mut p = vec![0.5, 0.25];
        for _ in 0..5 {
            state.step(&mut p, &[3.0, -1.0]).unwrap();
        }
        assert_eq!(p, vec![0.5, 0.25]);
        assert!(matches!(
            state.step(&mut p, &[1.0]),
            Err(NeuralError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn adam_reduces_quadratic_loss() {
        // loss = ½‖p − c‖²
        let c = [1.0, -2.0];
        let loss = |p: &[f64]| 0.5 * p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let mut state = AdamState::new(2, 1e-2);
        let mut p = vec![0.0, 0.0];
        let l0 = loss(&p);
        for _ in 0..2 {
            let g: Vec<f64> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
            state.step(&mut p, &g).unwrap();
        }
        assert!(loss(&p) < l0);
    }

    #[test]
    fn serialization_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::init(3, 16, Activation::Relu, &mut rng);
        let json = serde_json::to_string(&net).unwrap();
        assert!(json.contains("\"W1\""));
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        let x = [0.1, 0.7, -0.4];
        assert_eq!(back.forward(&x).unwrap().to_bits(), net.forward(&x).unwrap().to_bits());
    }

    #[test]
    fn deserialization_checks_shapes() {
        let bad = r#"{"input_dim":2,"hidden_width":2,"activation":"relu","W1":[1,2,3],"b1":[0,0],"w2":[0,0],"b2":0}"#;
        assert!(serde_json::from_str::<Mlp>(bad).is_err());
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Mlp::init(4, 64, Activation::Relu, &mut rng);
        assert!(net.w1.as_slice().iter().all(|v| v.abs() <= 0.5));
        assert!(net.w2.iter().all(|v| v.abs() <= 0.125));
    }
}
