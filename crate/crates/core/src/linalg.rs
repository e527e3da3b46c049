//! Dense linear-algebra kernels: SPD factorization, spectra, circulants.
//!
//! Matrices here are small (order at most a few hundred). Symmetric eigen and
//! singular value decompositions are delegated to `nalgebra`; the Cholesky
//! factorization is local so that its breakdown threshold is explicit.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 10_000;

/// Symmetric matrix, symmetric to within `1e-12` of its largest entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(m + m^T) / 2` without checking.
    pub fn symmetrized(m: &DMatrix<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        max_off_diagonal(&self.0)
    }
}

pub fn max_off_diagonal(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Fails when a pivot drops to `n * eps * max_diag` or below.
    pub fn factor(a: &SymMatrix) -> Result<Self> {
        let a = a.matrix();
        let n = a.nrows();
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
        let threshold = n as f64 * f64::EPSILON * max_diag;
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d.is_nan() || d <= threshold {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d, threshold });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor_matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `L Y = B` in place.
    fn forward(&self, b: &mut DMatrix<f64>) {
        let n = self.l.nrows();
        for c in 0..b.ncols() {
            for i in 0..n {
                let mut s = b[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * b[(k, c)];
                }
                b[(i, c)] = s / self.l[(i, i)];
            }
        }
    }

    /// Solves `L^T X = Y` in place.
    fn backward(&self, b: &mut DMatrix<f64>) {
        let n = self.l.nrows();
        for c in 0..b.ncols() {
            for i in (0..n).rev() {
                let mut s = b[(i, c)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * b[(k, c)];
                }
                b[(i, c)] = s / self.l[(i, i)];
            }
        }
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if b.nrows() != self.l.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has {} rows, matrix order is {}",
                b.nrows(),
                self.l.nrows()
            )));
        }
        let mut x = b.clone();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.l.nrows();
        let mut x = DMatrix::identity(n, n);
        self.forward(&mut x);
        self.backward(&mut x);
        SymMatrix::symmetrized(&x).into_inner()
    }

    /// `Tr(A^-1) = ||L^-1||_F^2`.
    pub fn inverse_trace(&self) -> f64 {
        let n = self.l.nrows();
        let mut y = DMatrix::identity(n, n);
        self.forward(&mut y);
        y.norm_squared()
    }
}

/// `X` with `A X = B` for symmetric positive definite `A`.
pub fn spd_solve(a: &SymMatrix, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::factor(a)?.solve(b)
}

pub fn trace_of_inverse(a: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::factor(a)?.inverse_trace())
}

/// Eigenvalues in descending order, with matching eigenvector columns if requested.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<f64>>,
}

impl Spectrum {
    /// `|| A - V diag(lambda) V^T ||_F`, if vectors are present.
    pub fn reconstruction_residual(&self, a: &SymMatrix) -> Option<f64> {
        let v = self.eigenvectors.as_ref()?;
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        Some((a.matrix() - v * lambda * v.transpose()).norm())
    }
}

pub fn sym_eigen(a: &SymMatrix, with_vectors: bool) -> Result<Spectrum> {
    let n = a.order();
    if n == 0 {
        return Ok(Spectrum { eigenvalues: vec![], eigenvectors: with_vectors.then(|| DMatrix::zeros(0, 0)) });
    }
    let eig = SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::ConvergenceFailure { order: n, max_abs: a.matrix().amax() })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = with_vectors.then(|| {
        let mut v = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            v.set_column(dst, &eig.eigenvectors.column(src));
        }
        v
    });
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// Singular values, descending; `min(rows, cols)` of them.
pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(vec![]);
    }
    let svd = SVD::try_new(a.clone(), false, false, f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        Error::ConvergenceFailure { order: a.nrows().max(a.ncols()), max_abs: a.amax() },
    )?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Circulant matrix `C[j][k] = c[(k - j) mod n]`.
pub fn circulant_matrix(first_row: &[f64]) -> DMatrix<f64> {
    let n = first_row.len();
    DMatrix::from_fn(n, n, |j, k| first_row[(k + n - j) % n])
}

/// `psi_m = sum_k c_k exp(-j 2 pi m k / n)` for `m = 0..n-1`.
pub fn circulant_eigenvalues(first_row: &[f64]) -> Vec<Complex64> {
    let n = first_row.len();
    (0..n)
        .map(|m| {
            first_row
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    let phase = -2.0 * PI * ((m * k) % n) as f64 / n as f64;
                    Complex64::from_polar(c, phase)
                })
                .sum()
        })
        .collect()
}

/// Spectrum of `[[I, G], [G^T, I]]` from the singular values of `G`, descending.
pub fn block_identity_eigs(g: &DMatrix<f64>) -> Result<Vec<f64>> {
    let order = g.nrows() + g.ncols();
    let s = singular_values(g)?;
    let mut eigs = Vec::with_capacity(order);
    for &si in &s {
        eigs.push(1.0 + si);
        eigs.push(1.0 - si);
    }
    eigs.resize(order, 1.0);
    eigs.sort_by(|x, y| y.total_cmp(x));
    Ok(eigs)
}

/// Dense `[[I, G], [G^T, I]]`.
pub fn block_identity_matrix(g: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = g.shape();
    let mut p = DMatrix::identity(r + c, r + c);
    p.view_mut((0, r), (r, c)).copy_from(g);
    p.view_mut((r, 0), (c, r)).copy_from(&g.transpose());
    p
}

/// Convex functions on `x > 0` for which the trace gap is exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexFn {
    Inverse,
    InverseSquare,
}

impl ConvexFn {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ConvexFn::Inverse => 1.0 / x,
            ConvexFn::InverseSquare => 1.0 / (x * x),
        }
    }
}

/// `Tr f(A) - sum_j f(A_jj)`; nonnegative, and zero exactly for diagonal `A`.
pub fn peierl_gap(a: &SymMatrix, f: ConvexFn) -> Result<f64> {
    let chol = Cholesky::factor(a)?;
    let trace_f = match f {
        ConvexFn::Inverse => chol.inverse_trace(),
        ConvexFn::InverseSquare => chol.inverse().norm_squared(),
    };
    let diag: f64 = (0..a.order()).map(|j| f.apply(a.matrix()[(j, j)])).sum();
    Ok(trace_f - diag)
}
