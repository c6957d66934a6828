//! Continuous-time Lyapunov and algebraic Riccati equations.
//!
//! The CARE `AᵀΠ + ΠA − ΠBR⁻¹BᵀΠ + Q = 0` is solved by Newton–Kleinman
//! iteration. Each step is a Lyapunov solve done by vectorizing into an
//! n²×n² linear system, which is fine at the sizes used here.

use thiserror::Error;

use crate::numkit::{
    frobenius_norm, inverse, sym_eigen, DenseMatrix, DenseVector, LuFactors, NumError,
};

pub const NEWTON_MAX_ITERATIONS: usize = 50;
pub const NEWTON_STEP_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("Lyapunov operator is singular (eigenvalue pair summing to zero)")]
    SingularLyapunov,
    #[error("initial closed loop is not Hurwitz")]
    NotStabilizable,
    #[error("Newton-Kleinman did not converge in {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("Riccati residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// Solves `Fᵀ X + X F + C = 0` for symmetric X.
pub fn solve_lyapunov(f: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix, RiccatiError> {
    let n = f.rows();
    if !f.is_square() || c.rows() != n || c.cols() != n {
        return Err(RiccatiError::DimensionMismatch(format!(
            "F is {}x{}, C is {}x{}",
            f.rows(),
            f.cols(),
            c.rows(),
            c.cols()
        )));
    }
    // row-major vec: x[i*n + j] = X_ij
    //   (FᵀX)_ij = Σ_k F_ki X_kj,  (XF)_ij = Σ_k X_ik F_kj
    let nn = n * n;
    let mut op = DenseMatrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                op[(row, k * n + j)] += f[(k, i)];
                op[(row, i * n + k)] += f[(k, j)];
            }
        }
    }
    let rhs: Vec<f64> = c.as_slice().iter().map(|v| -v).collect();
    let lu = match LuFactors::factor(&op) {
        Ok(lu) => lu,
        Err(NumError::SingularMatrix { .. }) => return Err(RiccatiError::SingularLyapunov),
        Err(e) => return Err(e.into()),
    };
    let x = lu.solve(&rhs)?;
    let x = DenseMatrix::from_row_major(n, n, x.into_inner())?;
    Ok(x.symmetrized())
}

/// Data of a continuous-time algebraic Riccati equation.
#[derive(Debug, Clone)]
pub struct CareProblem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

impl CareProblem {
    pub fn new(a: DenseMatrix, b: DenseMatrix, q: DenseMatrix, r: DenseMatrix) -> Self {
        Self { a, b, q, r }
    }

    pub fn validate(&self) -> Result<(), RiccatiError> {
        let n = self.a.rows();
        let m = self.b.cols();
        let ok = self.a.is_square()
            && self.b.rows() == n
            && self.q.rows() == n
            && self.q.cols() == n
            && self.r.rows() == m
            && self.r.cols() == m;
        if !ok {
            return Err(RiccatiError::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, Q {}x{}, R {}x{}",
                self.a.rows(),
                self.a.cols(),
                self.b.rows(),
                self.b.cols(),
                self.q.rows(),
                self.q.cols(),
                self.r.rows(),
                self.r.cols()
            )));
        }
        if !self.q.is_symmetric() {
            return Err(NumError::NotSymmetric {
                asymmetry: self.q.asymmetry(),
            }
            .into());
        }
        if !self.r.is_symmetric() {
            return Err(NumError::NotSymmetric {
                asymmetry: self.r.asymmetry(),
            }
            .into());
        }
        Ok(())
    }

    /// Frobenius norm of `AᵀX + XA − XBR⁻¹BᵀX + Q`.
    pub fn residual(&self, x: &DenseMatrix) -> Result<f64, RiccatiError> {
        let r_inv = inverse(&self.r)?;
        let bt = self.b.transpose();
        let ata = self.a.transpose().matmul(x)?.add(&x.matmul(&self.a)?)?;
        let quad = x.matmul(&self.b)?.matmul(&r_inv)?.matmul(&bt)?.matmul(x)?;
        let res = ata.sub(&quad)?.add(&self.q)?;
        Ok(frobenius_norm(&res))
    }
}

/// Stabilizing solution Π of the CARE.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub pi: DenseMatrix,
    pub residual_fro: f64,
    pub newton_iterations: usize,
}

/// Newton–Kleinman from the zero gain; requires A to be Hurwitz.
pub fn solve_care(p: &CareProblem) -> Result<RiccatiSolution, RiccatiError> {
    p.validate()?;
    let k0 = DenseMatrix::zeros(p.b.cols(), p.a.rows());
    solve_care_from(p, &k0)
}

/// Newton–Kleinman from a user-supplied stabilizing gain `k0` (m×n).
pub fn solve_care_from(p: &CareProblem, k0: &DenseMatrix) -> Result<RiccatiSolution, RiccatiError> {
    p.validate()?;
    let n = p.a.rows();
    let m = p.b.cols();
    if k0.rows() != m || k0.cols() != n {
        return Err(RiccatiError::DimensionMismatch(format!(
            "initial gain is {}x{}, expected {m}x{n}",
            k0.rows(),
            k0.cols()
        )));
    }
    if !is_closed_loop_stable(&p.a, &p.b, k0) {
        return Err(RiccatiError::NotStabilizable);
    }
    let r_inv = inverse(&p.r)?;
    let r_inv_bt = r_inv.matmul(&p.b.transpose())?;

    let mut gain = k0.clone();
    let mut previous: Option<DenseMatrix> = None;
    let mut last_step = f64::INFINITY;
    for iteration in 1..=NEWTON_MAX_ITERATIONS {
        let closed = p.a.sub(&p.b.matmul(&gain)?)?;
        let weight = p.q.add(&gain.transpose().matmul(&p.r)?.matmul(&gain)?)?;
        let x = solve_lyapunov(&closed, &weight)?;
        gain = r_inv_bt.matmul(&x)?;
        if let Some(prev) = &previous {
            last_step = frobenius_norm(&x.sub(prev)?);
            if last_step <= NEWTON_STEP_TOL * (1.0 + frobenius_norm(prev)) {
                return finish(p, x, iteration);
            }
        }
        previous = Some(x);
    }
    Err(RiccatiError::NoConvergence {
        iterations: NEWTON_MAX_ITERATIONS,
        last_step,
    })
}

fn finish(p: &CareProblem, pi: DenseMatrix, iterations: usize) -> Result<RiccatiSolution, RiccatiError> {
    let residual = p.residual(&pi)?;
    let tolerance = RESIDUAL_TOL * (1.0 + frobenius_norm(&p.q));
    if residual.is_nan() || residual > tolerance {
        return Err(RiccatiError::ResidualTooLarge { residual, tolerance });
    }
    Ok(RiccatiSolution {
        pi,
        residual_fro: residual,
        newton_iterations: iterations,
    })
}

/// z0ᵀ Π z0.
pub fn exact_value(sol: &RiccatiSolution, z0: &[f64]) -> Result<f64, RiccatiError> {
    Ok(sol.pi.quad_form(z0)?)
}

/// λ_max(Π) and a unit eigenvector: the worst unit-norm initial state.
pub fn worst_case_value(sol: &RiccatiSolution) -> Result<(f64, DenseVector), RiccatiError> {
    let eig = sym_eigen(&sol.pi)?;
    Ok((eig.max_eigenvalue(), eig.eigenvector(0)))
}

/// K = R⁻¹ Bᵀ Π.
pub fn feedback_gain(
    sol: &RiccatiSolution,
    b: &DenseMatrix,
    r: &DenseMatrix,
) -> Result<DenseMatrix, RiccatiError> {
    let bt_pi = b.transpose().matmul(&sol.pi)?;
    let lu = LuFactors::factor(r)?;
    let mut gain = DenseMatrix::zeros(b.cols(), sol.pi.cols());
    for j in 0..bt_pi.cols() {
        let col = lu.solve(&bt_pi.column(j))?;
        for i in 0..col.dim() {
            gain[(i, j)] = col[i];
        }
    }
    Ok(gain)
}

/// Lyapunov test: A − BK is Hurwitz iff (A−BK)ᵀX + X(A−BK) + I = 0 has X ≻ 0.
pub fn is_closed_loop_stable(a: &DenseMatrix, b: &DenseMatrix, k: &DenseMatrix) -> bool {
    closed_loop_lyapunov(a, b, k).is_some()
}

/// The Lyapunov certificate X of a stable closed loop, if one exists.
pub fn closed_loop_lyapunov(a: &DenseMatrix, b: &DenseMatrix, k: &DenseMatrix) -> Option<DenseMatrix> {
    let closed = a.sub(&b.matmul(k).ok()?).ok()?;
    let x = solve_lyapunov(&closed, &DenseMatrix::identity(a.rows())).ok()?;
    if !x.is_finite() {
        return None;
    }
    let eig = sym_eigen(&x).ok()?;
    (eig.min_eigenvalue() > 0.0).then_some(x)
}
