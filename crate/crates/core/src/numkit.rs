//! Dense real linear algebra used throughout the crate.
//!
//! Matrices are stored row-major. Everything here is sized for the small
//! systems this crate works with (n up to a few dozen), so the algorithms
//! are the textbook ones: partial-pivot LU, Cholesky, and cyclic Jacobi
//! for symmetric eigenproblems.

use std::fmt;
use std::ops::{Deref, DerefMut, Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance of the symmetry predicate.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Sweep cap for the Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix: pivot {pivot:e} at column {column}")]
    SingularMatrix { column: usize, pivot: f64 },
    #[error("matrix is not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

pub type Result<T> = std::result::Result<T, NumError>;

/// Dense real vector.
#[derive(Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        debug_assert_eq!(self.0.len(), other.len());
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for DenseVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for DenseVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for DenseVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Debug for DenseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Dense real matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(NumError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or empty input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        assert!(!rows.is_empty(), "no rows");
        let cols = rows[0].as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self::from_row_major(rows.len(), cols, data).expect("non-empty rows")
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> DenseVector {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Result<DenseVector> {
        if self.cols != x.len() {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// xᵀ A x.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let ax = self.mat_vec(x)?;
        Ok(ax.dot(x))
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(NumError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest |A_ij − A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && self.asymmetry() <= SYMMETRY_TOL * (1.0 + self.max_abs())
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrized(&self) -> DenseMatrix {
        Self::from_fn(self.rows, self.cols, |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }

    fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(NumError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn require_symmetric(&self) -> Result<usize> {
        let n = self.require_square()?;
        if !self.is_symmetric() {
            return Err(NumError::NotSymmetric {
                asymmetry: self.asymmetry(),
            });
        }
        Ok(n)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Row-pivoted LU factors, `P A = L U` packed into one matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.require_square()?;
        let threshold = 1e-14 * frobenius_norm(a);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs < threshold || pivot_abs == 0.0 {
                return Err(NumError::SingularMatrix {
                    column: k,
                    pivot: pivot_abs,
                });
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        let ukj = lu.data[k * n + j];
                        lu.data[i * n + j] -= factor * ukj;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<DenseVector> {
        let n = self.lu.rows;
        if b.len() != n {
            return Err(NumError::DimensionMismatch(format!(
                "rhs of length {} for a {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x.into())
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    if a.is_square() && b.len() != a.rows {
        return Err(NumError::DimensionMismatch(format!(
            "rhs of length {} for a {}x{} system",
            b.len(),
            a.rows,
            a.cols
        )));
    }
    LuFactors::factor(a)?.solve(b)
}

/// Inverse via LU; only used on small, well-conditioned matrices such as R.
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = LuFactors::factor(a)?;
    let n = a.rows;
    let mut inv = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = lu.solve(&e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Ok(inv)
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = A`.
pub fn cholesky_lower(a: &DenseMatrix) -> Result<DenseMatrix> {
    let n = a.require_symmetric()?;
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d.is_nan() || d <= 0.0 {
            return Err(NumError::NotPositiveDefinite { row: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEigenResult {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl SymEigenResult {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn eigenvector(&self, k: usize) -> DenseVector {
        self.eigenvectors.column(k)
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &DenseMatrix) -> Result<SymEigenResult> {
    let n = a.require_symmetric()?;
    let mut work = a.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let target = 1e-12 * frobenius_norm(a);

    let mut converged = off_diagonal_norm(&work) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = work[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (work[(q, q)] - work[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = work[(k, p)];
                    let akq = work[(k, q)];
                    work[(k, p)] = c * akp - s * akq;
                    work[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = work[(p, k)];
                    let aqk = work[(q, k)];
                    work[(p, k)] = c * apk - s * aqk;
                    work[(q, k)] = s * apk + c * aqk;
                }
                work[(p, q)] = 0.0;
                work[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        converged = off_diagonal_norm(&work) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].total_cmp(&work[(i, i)]));
    let eigenvalues = order.iter().map(|&i| work[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(SymEigenResult {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_matrix(n: usize, seed: u64) -> DenseMatrix {
        // small LCG keeps the helper dependency-free
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        DenseMatrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    fn spd(n: usize, seed: u64) -> DenseMatrix {
        let m = random_matrix(n, seed);
        m.matmul(&m.transpose())
            .unwrap()
            .add(&DenseMatrix::identity(n))
            .unwrap()
    }

    #[test]
    fn lu_identity_and_diagonal() {
        let x = lu_solve(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(&*x, &[1.0, 2.0, 3.0]);
        let x = lu_solve(&DenseMatrix::from_diag(&[2.0, 4.0]), &[2.0, 8.0]).unwrap();
        assert_eq!(&*x, &[1.0, 2.0]);
    }

    #[test]
    fn lu_rank_deficient_is_singular() {
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(
            lu_solve(&a, &[1.0, 2.0]),
            Err(NumError::SingularMatrix { .. })
        ));
    }

    #[test]
    fn lu_needs_pivoting() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        let x = lu_solve(&a, &[3.0, 5.0]).unwrap();
        assert_eq!(&*x, &[5.0, 3.0]);
    }

    #[test]
    fn lu_rejects_bad_rhs() {
        assert!(matches!(
            lu_solve(&DenseMatrix::identity(2), &[1.0]),
            Err(NumError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(cholesky_lower(&DenseMatrix::identity(3)).unwrap(), DenseMatrix::identity(3));
        let a = DenseMatrix::from_rows(&[[4.0, 2.0], [2.0, 5.0]]);
        let l = cholesky_lower(&a).unwrap();
        assert_eq!(l, DenseMatrix::from_rows(&[[2.0, 0.0], [1.0, 2.0]]));
        // reconstruction by direct multiplication
        let llt = l.matmul(&l.transpose()).unwrap();
        assert_eq!(llt, a);
        let indefinite = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            cholesky_lower(&indefinite),
            Err(NumError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn sym_eigen_diagonal() {
        let res = sym_eigen(&DenseMatrix::from_diag(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(res.eigenvalues, vec![3.0, 2.0, 1.0]);
        let expected = DenseMatrix::from_rows(&[[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(res.eigenvectors, expected);
    }

    #[test]
    fn sym_eigen_swap_matrix() {
        let res = sym_eigen(&DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert!((res.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((res.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_eigen_rejects_asymmetric() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
        assert!(matches!(sym_eigen(&a), Err(NumError::NotSymmetric { .. })));
    }

    #[test]
    fn frobenius_examples() {
        assert!((frobenius_norm(&DenseMatrix::identity(3)) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&DenseMatrix::zeros(2, 3)), 0.0);
        assert_eq!(frobenius_norm(&DenseMatrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]])), 5.0);
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs_spd(n in 1usize..12, seed in any::<u64>()) {
            let a = spd(n, seed);
            let l = cholesky_lower(&a).unwrap();
            for i in 0..n {
                prop_assert!(l[(i, i)] > 0.0);
                for j in (i + 1)..n {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
            let err = frobenius_norm(&l.matmul(&l.transpose()).unwrap().sub(&a).unwrap());
            prop_assert!(err <= 1e-10 * (1.0 + frobenius_norm(&a)));
        }

        #[test]
        fn sym_eigen_reconstructs(n in 1usize..12, seed in any::<u64>()) {
            let m = random_matrix(n, seed);
            let a = m.add(&m.transpose()).unwrap();
            let res = sym_eigen(&a).unwrap();
            let v = &res.eigenvectors;
            let lambda = DenseMatrix::from_diag(&res.eigenvalues);
            let recon = v.matmul(&lambda).unwrap().matmul(&v.transpose()).unwrap();
            let afro = frobenius_norm(&a);
            prop_assert!(frobenius_norm(&recon.sub(&a).unwrap()) <= 1e-10 * (1.0 + afro));
            let vtv = v.transpose().matmul(v).unwrap();
            prop_assert!(frobenius_norm(&vtv.sub(&DenseMatrix::identity(n)).unwrap()) <= 1e-10);
            prop_assert!(res.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn sym_eigen_spd_positive_and_trace(n in 1usize..12, seed in any::<u64>()) {
            let a = spd(n, seed);
            let res = sym_eigen(&a).unwrap();
            prop_assert!(res.eigenvalues.iter().all(|&l| l > 0.0));
            let sum: f64 = res.eigenvalues.iter().sum();
            prop_assert!((sum - a.trace()).abs() <= 1e-10 * a.trace().abs());
        }

        #[test]
        fn lu_solve_inverts_multiply(n in 1usize..15, seed in any::<u64>()) {
            // diagonally dominant keeps the system well conditioned
            let a = random_matrix(n, seed).add(&DenseMatrix::identity(n).scaled(n as f64)).unwrap();
            let x_true: DenseVector = (0..n).map(|i| (i as f64) - 0.5 * n as f64).collect();
            let b = a.mat_vec(&x_true).unwrap();
            let x = lu_solve(&a, &b).unwrap();
            let resid = a.mat_vec(&x).unwrap().iter().zip(b.iter()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            prop_assert!(resid <= 1e-10 * (1.0 + b.norm_inf()));
            let err = x.iter().zip(x_true.iter()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            prop_assert!(err <= 1e-9 * (1.0 + x_true.norm_inf()));
        }
    }
}
