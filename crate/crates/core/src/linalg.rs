//! Dense and banded linear-algebra helpers shared by the samplers.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::random::standard_normal;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor of a symmetric positive-definite matrix (symmetrized first).
pub fn cholesky(mut m: DMatrix<f64>, context: &str) -> Result<Cholesky<f64, Dyn>> {
    symmetrize(&mut m);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularPosterior(alloc::format!("{context}: non-finite matrix")));
    }
    Cholesky::new(m).ok_or_else(|| Error::SingularPosterior(alloc::format!("{context}: not positive definite")))
}

/// Draw from `N(precision^-1 linear, precision^-1)`.
pub fn draw_from_precision<R: Rng + ?Sized>(
    rng: &mut R,
    precision: DMatrix<f64>,
    linear: &DVector<f64>,
    context: &str,
) -> Result<DVector<f64>> {
    let chol = cholesky(precision, context)?;
    let mean = chol.solve(linear);
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    let offset = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::SingularPosterior(alloc::format!("{context}: triangular solve")))?;
    Ok(mean + offset)
}

/// Posterior mean and covariance for a Gaussian with the given precision and linear term.
pub fn precision_moments(
    precision: DMatrix<f64>,
    linear: &DVector<f64>,
    context: &str,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let chol = cholesky(precision, context)?;
    Ok((chol.solve(linear), chol.inverse()))
}

/// Square root `S` with `S S' = cov` for a symmetric positive semi-definite matrix.
pub fn psd_sqrt(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = cov.clone();
    symmetrize(&mut c);
    if let Some(ch) = Cholesky::new(c.clone()) {
        return ch.l();
    }
    let eig = c.symmetric_eigen();
    let mut s = eig.eigenvectors.clone();
    for (j, lam) in eig.eigenvalues.iter().enumerate() {
        let root = libm::sqrt(lam.max(0.0));
        for i in 0..s.nrows() {
            s[(i, j)] *= root;
        }
    }
    s
}

/// Draw from `N(mean, cov)` with a positive semi-definite covariance.
pub fn draw_mvn<R: Rng + ?Sized>(rng: &mut R, mean: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
    let s = psd_sqrt(cov);
    let z = DVector::from_fn(mean.len(), |_, _| standard_normal(rng));
    mean + s * z
}

/// Solve `a x = b` for symmetric positive semi-definite `a`, falling back to the
/// eigen pseudo-inverse when `a` is singular.
pub fn solve_psd(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = a.clone();
    symmetrize(&mut c);
    if let Some(ch) = Cholesky::new(c.clone()) {
        return ch.solve(b);
    }
    let eig = c.symmetric_eigen();
    let tol = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-12 * a.nrows() as f64;
    let mut inv = DMatrix::zeros(a.nrows(), a.ncols());
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        if *lam > tol {
            let v = eig.eigenvectors.column(k);
            inv += (v * v.transpose()) / *lam;
        }
    }
    inv * b
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues().iter().fold(0.0, |acc, z| acc.max(libm::hypot(z.re, z.im)))
}

/// Symmetric tridiagonal matrix stored by its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

/// Lower bidiagonal Cholesky factor `L` of a [`Tridiagonal`] matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedCholesky {
    pub diagonal: Vec<f64>,
    pub sub_diagonal: Vec<f64>,
}

impl Tridiagonal {
    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let n = self.diagonal.len();
        let mut d = vec![0.0; n];
        let mut s = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut piv = self.diagonal[i];
            if i > 0 {
                s[i - 1] = self.off_diagonal[i - 1] / d[i - 1];
                piv -= s[i - 1] * s[i - 1];
            }
            if !(piv > 0.0) || !piv.is_finite() {
                return Err(Error::SingularPosterior(alloc::format!(
                    "banded precision not positive definite at row {i}"
                )));
            }
            d[i] = libm::sqrt(piv);
        }
        Ok(BandedCholesky { diagonal: d, sub_diagonal: s })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diagonal.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i == j + 1 {
                self.off_diagonal[j]
            } else if j == i + 1 {
                self.off_diagonal[i]
            } else {
                0.0
            }
        })
    }
}

impl BandedCholesky {
    /// Solve `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        for i in 0..b.len() {
            let mut v = b[i];
            if i > 0 {
                v -= self.sub_diagonal[i - 1] * x[i - 1];
            }
            x[i] = v / self.diagonal[i];
        }
        x
    }

    /// Solve `L' x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = b[i];
            if i + 1 < n {
                v -= self.sub_diagonal[i] * x[i + 1];
            }
            x[i] = v / self.diagonal[i];
        }
        x
    }

    /// Solve `L L' x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }
}

/// Draw from `N(K^-1 d, K^-1)` for a tridiagonal precision `K` in O(n).
pub fn draw_from_tridiagonal_precision<R: Rng + ?Sized>(
    rng: &mut R,
    precision: &Tridiagonal,
    linear: &[f64],
) -> Result<Vec<f64>> {
    let chol = precision.cholesky()?;
    let mean = chol.solve(linear);
    let z: Vec<f64> = (0..linear.len()).map(|_| standard_normal(rng)).collect();
    let offset = chol.solve_upper(&z);
    Ok(mean.iter().zip(offset).map(|(m, o)| m + o).collect())
}

/// Least-squares coefficients of `y` on the columns of `x`.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let xtx = x.transpose() * x;
    let xty = x.transpose() * y;
    let chol = Cholesky::new(xtx.clone()).ok_or_else(|| Error::SingularRegression("X'X is singular".into()))?;
    // Guard against numerically rank-deficient designs that still factor.
    let diag_ratio = chol.l().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
        / chol.l().diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(diag_ratio > 1e-7) {
        return Err(Error::SingularRegression("design matrix is rank deficient".into()));
    }
    Ok(chol.solve(&xty))
}
