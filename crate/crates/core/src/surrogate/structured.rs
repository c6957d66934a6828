//! Π_θ(r) = L_θ(r) L_θ(r)ᵀ with one small network per lower-triangular
//! entry of L. Diagonal entries pass through softplus and are shifted by
//! `eps`, so L is nonsingular and Π_θ positive definite for every r.

use rand::Rng;

use crate::neural::{sigmoid, softplus, Activation, AdamState, Mlp};
use crate::numkit::{sym_eigen, DenseMatrix, DenseVector};

use super::dataset::RiccatiDataset;
use super::{LossHistory, SurrogateError, TrainConfig};

/// Smallest single-precision increment, added to every diagonal entry of L.
pub const DIAGONAL_EPS: f64 = 1.1920929e-7;

/// Position of entry (i, j), i ≥ j, in row-major lower-triangular order.
#[inline]
pub fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSurrogate {
    n: usize,
    m: usize,
    pub eps: f64,
    /// n(n+1)/2 networks ℝᵐ → ℝ in [`tri_index`] order.
    pub entries: Vec<Mlp>,
}

impl StructuredSurrogate {
    pub fn from_parts(n: usize, m: usize, eps: f64, entries: Vec<Mlp>) -> Result<Self, SurrogateError> {
        if n == 0 || m == 0 {
            return Err(SurrogateError::DimensionMismatch("n and m must be positive".into()));
        }
        if entries.len() != n * (n + 1) / 2 {
            return Err(SurrogateError::DimensionMismatch(format!(
                "{} entry networks for n = {n}, expected {}",
                entries.len(),
                n * (n + 1) / 2
            )));
        }
        if let Some(net) = entries.iter().find(|net| net.input_dim() != m) {
            return Err(SurrogateError::DimensionMismatch(format!(
                "entry network takes {} inputs, expected m = {m}",
                net.input_dim()
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(SurrogateError::DimensionMismatch(format!("eps must be positive, got {eps}")));
        }
        Ok(Self { n, m, eps, entries })
    }

    /// All entry networks identically zero.
    pub fn zeros(n: usize, m: usize, hidden_width: usize, activation: Activation) -> Self {
        let entries = (0..n * (n + 1) / 2)
            .map(|_| Mlp::zeros(m, hidden_width, activation))
            .collect();
        Self {
            n,
            m,
            eps: DIAGONAL_EPS,
            entries,
        }
    }

    pub fn init<R: Rng + ?Sized>(n: usize, m: usize, hidden_width: usize, activation: Activation, rng: &mut R) -> Self {
        let entries = (0..n * (n + 1) / 2)
            .map(|_| Mlp::init(m, hidden_width, activation, rng))
            .collect();
        Self {
            n,
            m,
            eps: DIAGONAL_EPS,
            entries,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> &Mlp {
        &self.entries[tri_index(i, j)]
    }

    fn check_r(&self, r: &[f64]) -> Result<(), SurrogateError> {
        if r.len() != self.m {
            return Err(SurrogateError::DimensionMismatch(format!(
                "r has dimension {}, surrogate expects {}",
                r.len(),
                self.m
            )));
        }
        Ok(())
    }

    fn check_z0(&self, z0: &[f64]) -> Result<(), SurrogateError> {
        if z0.len() != self.n {
            return Err(SurrogateError::DimensionMismatch(format!(
                "z0 has dimension {}, surrogate expects {}",
                z0.len(),
                self.n
            )));
        }
        Ok(())
    }

    fn l_from_raw(&self, raw: &[f64]) -> DenseMatrix {
        let mut l = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..i {
                l[(i, j)] = raw[tri_index(i, j)];
            }
            l[(i, i)] = softplus(raw[tri_index(i, i)]) + self.eps;
        }
        l
    }

    fn raw_outputs(&self, r: &[f64]) -> Vec<f64> {
        self.entries.iter().map(|net| net.forward_unchecked(r)).collect()
    }

    /// Lower-triangular factor L_θ(r).
    pub fn assemble_l(&self, r: &[f64]) -> Result<DenseMatrix, SurrogateError> {
        self.check_r(r)?;
        Ok(self.l_from_raw(&self.raw_outputs(r)))
    }

    /// Π_θ(r) = L Lᵀ.
    pub fn pi_theta(&self, r: &[f64]) -> Result<DenseMatrix, SurrogateError> {
        let l = self.assemble_l(r)?;
        Ok(l.matmul(&l.transpose()).expect("square factor"))
    }

    /// ‖L(r)ᵀ z0‖², i.e. z0ᵀ Π_θ(r) z0 evaluated through the factor.
    pub fn value(&self, z0: &[f64], r: &[f64]) -> Result<f64, SurrogateError> {
        self.check_z0(z0)?;
        let l = self.assemble_l(r)?;
        Ok(value_from_factor(&l, z0))
    }

    /// (∇_{z0} V_θ, ∇_r V_θ).
    pub fn gradient(&self, z0: &[f64], r: &[f64]) -> Result<(DenseVector, DenseVector), SurrogateError> {
        self.check_z0(z0)?;
        self.check_r(r)?;
        let n = self.n;
        let evals: Vec<(f64, DenseVector)> = self.entries.iter().map(|net| net.value_and_grad_input(r)).collect();
        let raw: Vec<f64> = evals.iter().map(|(v, _)| *v).collect();
        let l = self.l_from_raw(&raw);
        // w = Lᵀ z0, V = wᵀw, ∂V/∂L_ij = 2 z0_i w_j
        let w: Vec<f64> = (0..n).map(|j| (j..n).map(|i| l[(i, j)] * z0[i]).sum()).collect();
        let grad_z0: DenseVector = (0..n).map(|i| 2.0 * (0..=i).map(|j| l[(i, j)] * w[j]).sum::<f64>()).collect();
        let mut grad_r = DenseVector::zeros(self.m);
        for (i, &zi) in z0.iter().enumerate().take(n) {
            for (j, &wj) in w.iter().enumerate().take(i + 1) {
                let k = tri_index(i, j);
                let mut coeff = 2.0 * zi * wj;
                if i == j {
                    coeff *= sigmoid(raw[k]);
                }
                if coeff != 0.0 {
                    for (g, d) in grad_r.iter_mut().zip(evals[k].1.iter()) {
                        *g += coeff * d;
                    }
                }
            }
        }
        Ok((grad_z0, grad_r))
    }

    /// λ_max(Π_θ(r)).
    pub fn worst_case_value(&self, r: &[f64]) -> Result<f64, SurrogateError> {
        Ok(sym_eigen(&self.pi_theta(r)?)?.max_eigenvalue())
    }

    /// Σ_s ‖Π_θ(r_s) − Π_s‖²_F over the dataset.
    pub fn loss(&self, data: &RiccatiDataset) -> Result<f64, SurrogateError> {
        self.check_dataset(data)?;
        Ok(data
            .records
            .iter()
            .map(|rec| {
                let p = self.pi_theta(&rec.r).expect("dimensions checked");
                p.sub(&rec.pi).expect("same shape").as_slice().iter().map(|v| v * v).sum::<f64>()
            })
            .sum())
    }

    fn check_dataset(&self, data: &RiccatiDataset) -> Result<(), SurrogateError> {
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

    /// Full-batch Adam on the summed Frobenius loss. The history holds the
    /// loss before each update followed by the final loss.
    pub fn train(&mut self, data: &RiccatiDataset, cfg: &TrainConfig) -> Result<LossHistory, SurrogateError> {
        self.check_dataset(data)?;
        cfg.validate()?;
        let n = self.n;
        let nets = self.entries.len();
        let samples = data.records.len();
        let mut states: Vec<AdamState> = self
            .entries
            .iter()
            .map(|net| AdamState::new(net.num_params(), cfg.learning_rate))
            .collect();
        let mut grads: Vec<Vec<f64>> = self.entries.iter().map(|net| vec![0.0; net.num_params()]).collect();
        let mut raw = vec![0.0; nets * samples];
        let mut upstream = vec![0.0; nets * samples];
        let mut history = LossHistory::default();

        for iteration in 0..=cfg.iterations {
            // forward: raw[s * nets + e]
            for (s, rec) in data.records.iter().enumerate() {
                for (e, net) in self.entries.iter().enumerate() {
                    raw[s * nets + e] = net.forward_unchecked(&rec.r);
                }
            }
            let mut loss = 0.0;
            for (s, rec) in data.records.iter().enumerate() {
                let raw_s = &raw[s * nets..(s + 1) * nets];
                let l = self.l_from_raw(raw_s);
                let residual = l
                    .matmul(&l.transpose())
                    .and_then(|p| p.sub(&rec.pi))
                    .expect("square matrices");
                loss += residual.as_slice().iter().map(|v| v * v).sum::<f64>();
                // ∂loss/∂L = 4 G L with G = LLᵀ − Π symmetric
                let dl = residual.matmul(&l).expect("square matrices");
                for i in 0..n {
                    for j in 0..=i {
                        let k = tri_index(i, j);
                        let mut u = 4.0 * dl[(i, j)];
                        if i == j {
                            u *= sigmoid(raw_s[k]);
                        }
                        upstream[s * nets + k] = u;
                    }
                }
            }
            if !loss.is_finite() {
                return Err(SurrogateError::NonFinite { iteration });
            }
            history.push(iteration, loss);
            if iteration == cfg.iterations {
                break;
            }
            for (e, (net, grad)) in self.entries.iter().zip(grads.iter_mut()).enumerate() {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for (s, rec) in data.records.iter().enumerate() {
                    net.accumulate_grad_params(&rec.r, upstream[s * nets + e], grad);
                }
            }
            for ((net, state), grad) in self.entries.iter_mut().zip(states.iter_mut()).zip(&grads) {
                net.adam_update(state, grad)?;
            }
        }
        Ok(history)
    }
}

/// ‖Lᵀ z0‖² for lower-triangular L.
pub(crate) fn value_from_factor(l: &DenseMatrix, z0: &[f64]) -> f64 {
    let n = l.rows();
    (0..n)
        .map(|j| {
            let w: f64 = (j..n).map(|i| l[(i, j)] * z0[i]).sum();
            w * w
        })
        .sum()
}
