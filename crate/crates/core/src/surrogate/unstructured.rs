//! V_θ(z0, r) as one network on the concatenated input (z0, r).
//! Nothing forces its output to be nonnegative.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::neural::{Activation, AdamState, Mlp};
use crate::numkit::DenseVector;
use crate::rng::{component_rng, standard_normal};

use super::dataset::ValueDataset;
use super::{LossHistory, SurrogateError, TrainConfig};

pub const WORST_CASE_STARTS: usize = 20;
pub const WORST_CASE_STEPS: usize = 500;
pub const WORST_CASE_STEP: f64 = 1e-2;
const WORST_CASE_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq)]
pub struct UnstructuredSurrogate {
    n: usize,
    m: usize,
    pub net: Mlp,
}

impl UnstructuredSurrogate {
    pub fn from_parts(n: usize, m: usize, net: Mlp) -> Result<Self, SurrogateError> {
        if n == 0 || m == 0 || net.input_dim() != n + m {
            return Err(SurrogateError::DimensionMismatch(format!(
                "network takes {} inputs, expected n + m = {}",
                net.input_dim(),
                n + m
            )));
        }
        Ok(Self { n, m, net })
    }

    pub fn init<R: Rng + ?Sized>(n: usize, m: usize, hidden_width: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            n,
            m,
            net: Mlp::init(n + m, hidden_width, activation, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn input(&self, z0: &[f64], r: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        if z0.len() != self.n || r.len() != self.m {
            return Err(SurrogateError::DimensionMismatch(format!(
                "(z0, r) of dimensions ({}, {}), surrogate expects ({}, {})",
                z0.len(),
                r.len(),
                self.n,
                self.m
            )));
        }
        Ok(z0.iter().chain(r).copied().collect())
    }

    pub fn value(&self, z0: &[f64], r: &[f64]) -> Result<f64, SurrogateError> {
        let x = self.input(z0, r)?;
        Ok(self.net.forward_unchecked(&x))
    }

    pub fn gradient(&self, z0: &[f64], r: &[f64]) -> Result<(DenseVector, DenseVector), SurrogateError> {
        let x = self.input(z0, r)?;
        let (_, g) = self.net.value_and_grad_input(&x);
        Ok((g[..self.n].into(), g[self.n..].into()))
    }

    /// Best value of V_θ(·, r) found by multistart projected gradient ascent
    /// on the unit sphere.
    pub fn worst_case_value(&self, r: &[f64]) -> Result<f64, SurrogateError> {
        let mut rng = ChaCha8Rng::seed_from_u64(WORST_CASE_SEED);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..WORST_CASE_STARTS {
            let mut z = unit_gaussian(&mut rng, self.n);
            for step in 0..=WORST_CASE_STEPS {
                let x = self.input(&z, r)?;
                let (v, g) = self.net.value_and_grad_input(&x);
                best = best.max(v);
                if step == WORST_CASE_STEPS {
                    break;
                }
                for (zi, gi) in z.iter_mut().zip(g.iter()) {
                    *zi += WORST_CASE_STEP * gi;
                }
                let norm = z.norm();
                if norm > 0.0 {
                    z = z.scaled(1.0 / norm);
                }
            }
        }
        Ok(best)
    }

    pub fn mse(&self, data: &ValueDataset) -> Result<f64, SurrogateError> {
        self.check_dataset(data)?;
        let total: f64 = data
            .records
            .iter()
            .map(|rec| {
                let d = self.value(&rec.z0, &rec.r).expect("dimensions checked") - rec.target;
                d * d
            })
            .sum();
        Ok(total / data.len() as f64)
    }

    fn check_dataset(&self, data: &ValueDataset) -> Result<(), SurrogateError> {
        if data.is_empty() {
            return Err(SurrogateError::EmptyDataset);
        }
        if data.n != self.n || data.m != self.m {
            return Err(SurrogateError::DimensionMismatch(format!(
                "dataset has n = {}, m = {}; surrogate has n = {}, m = {}",
                data.n, data.m, self.n, self.m
            )));
        }
        Ok(())
    }

    /// Mini-batch Adam on the mean squared error. Batches are drawn without
    /// replacement within each epoch from a permutation seeded by `cfg.seed`.
    /// The history holds the full-dataset MSE every `cfg.record_every`
    /// iterations and after the last one.
    pub fn train(&mut self, data: &ValueDataset, cfg: &TrainConfig) -> Result<LossHistory, SurrogateError> {
        self.check_dataset(data)?;
        cfg.validate()?;
        let inputs: Vec<Vec<f64>> = data
            .records
            .iter()
            .map(|rec| rec.z0.iter().chain(rec.r.iter()).copied().collect())
            .collect();
        let full_mse = |net: &Mlp| -> f64 {
            inputs
                .iter()
                .zip(&data.records)
                .map(|(x, rec)| {
                    let d = net.forward_unchecked(x) - rec.target;
                    d * d
                })
                .sum::<f64>()
                / inputs.len() as f64
        };

        let mut rng = component_rng(cfg.seed, "minibatch");
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        let mut cursor = order.len();
        let batch = cfg.batch_size.min(inputs.len());
        let mut state = AdamState::new(self.net.num_params(), cfg.learning_rate);
        let mut grad = vec![0.0; self.net.num_params()];
        let mut history = LossHistory::default();

        for iteration in 0..cfg.iterations {
            if iteration % cfg.record_every == 0 {
                let loss = full_mse(&self.net);
                if !loss.is_finite() {
                    return Err(SurrogateError::NonFinite { iteration });
                }
                history.push(iteration, loss);
            }
            if cursor + batch > order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let picked = &order[cursor..cursor + batch];
            cursor += batch;
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch as f64;
            for &idx in picked {
                let x = &inputs[idx];
                let residual = self.net.forward_unchecked(x) - data.records[idx].target;
                self.net.accumulate_grad_params(x, scale * residual, &mut grad);
            }
            self.net.adam_update(&mut state, &grad)?;
        }
        let loss = full_mse(&self.net);
        if !loss.is_finite() {
            return Err(SurrogateError::NonFinite {
                iteration: cfg.iterations,
            });
        }
        history.push(cfg.iterations, loss);
        Ok(history)
    }
}

fn unit_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseVector {
    loop {
        let z: DenseVector = (0..n).map(|_| standard_normal(rng)).collect();
        let norm = z.norm();
        if norm > 1e-12 {
            return z.scaled(1.0 / norm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::tests::random_net;
    use crate::surrogate::dataset::ValueRecord;

    #[test]
    fn zero_net_and_dimension_errors() {
        let s = UnstructuredSurrogate::from_parts(2, 1, Mlp::zeros(3, 4, Activation::Relu)).unwrap();
        assert_eq!(s.value(&[0.4, 0.1], &[1.0]).unwrap(), 0.0);
        assert!(s.value(&[0.4], &[1.0]).is_err());
        assert!(UnstructuredSurrogate::from_parts(2, 2, Mlp::zeros(3, 4, Activation::Relu)).is_err());
    }

    #[test]
    fn worst_case_matches_sphere_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let net = random_net(&mut rng, 3, 8, Activation::Softplus);
            let s = UnstructuredSurrogate::from_parts(2, 1, net).unwrap();
            let r = [rng.gen_range(0.0..3.0)];
            let grid_best = (0..200_000)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / 200_000.0;
                    s.value(&[t.cos(), t.sin()], &r).unwrap()
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let found = s.worst_case_value(&r).unwrap();
            assert!((found - grid_best).abs() < 1e-3, "{found} vs {grid_best}");
        }
    }

    fn single_record() -> ValueDataset {
        ValueDataset {
            n: 2,
            m: 1,
            records: vec![ValueRecord {
                z0: vec![0.5, -0.5].into(),
                r: vec![1.0].into(),
                target: 0.7,
            }],
        }
    }

    #[test]
    fn interpolates_a_single_record() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let mut s = UnstructuredSurrogate::init(2, 1, 16, Activation::Relu, &mut rng);
        let data = single_record();
        let hist = s
            .train(&data, &TrainConfig { iterations: 3000, learning_rate: 1e-2, ..TrainConfig::default() })
            .unwrap();
        assert!(hist.last() < 1e-6, "{}", hist.last());
        assert!((s.value(&[0.5, -0.5], &[1.0]).unwrap() - 0.7).abs() < 1e-3);
    }

    #[test]
    fn zero_learning_rate_keeps_loss_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut s = UnstructuredSurrogate::init(2, 1, 16, Activation::Relu, &mut rng);
        let mut data = single_record();
        for k in 0..10 {
            data.records.push(ValueRecord {
                z0: vec![0.1 * k as f64, 0.2].into(),
                r: vec![0.3 * k as f64].into(),
                target: 0.05 * k as f64,
            });
        }
        let cfg = TrainConfig {
            iterations: 50,
            learning_rate: 0.0,
            batch_size: 4,
            record_every: 5,
            ..TrainConfig::default()
        };
        let hist = s.train(&data, &cfg).unwrap();
        assert_eq!(hist.len(), 11);
        assert!(hist.values().iter().all(|v| *v == hist.values()[0]));
    }

    #[test]
    fn training_is_deterministic() {
        let mut data = single_record();
        for k in 0..40 {
            data.records.push(ValueRecord {
                z0: vec![(k as f64).sin(), (k as f64).cos()].into(),
                r: vec![0.07 * k as f64].into(),
                target: 0.02 * k as f64,
            });
        }
        let cfg = TrainConfig {
            iterations: 100,
            batch_size: 8,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(34);
            let mut s = UnstructuredSurrogate::init(2, 1, 8, Activation::Relu, &mut rng);
            let h = s.train(&data, &cfg).unwrap();
            (s, h)
        };
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut s = UnstructuredSurrogate::init(2, 1, 4, Activation::Relu, &mut rng);
        let data = ValueDataset { n: 2, m: 1, records: vec![] };
        assert!(matches!(s.train(&data, &TrainConfig::default()), Err(SurrogateError::EmptyDataset)));
    }
}
