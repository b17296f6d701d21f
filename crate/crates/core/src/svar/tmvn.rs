//! Exact sampling from a multivariate normal truncated to a box, using
//! minimax exponential tilting of the sequential (separation-of-variables)
//! proposal with an accept-reject correction.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{draw_mvn, symmetrize};
use crate::random::{open_uniform, truncated_standard_normal};
use crate::special::{ln_normal_prob, SQRT_2PI};

/// Proposal attempts allowed before giving up.
pub const MAX_PROPOSALS: usize = 100_000;

/// Draw `x ~ N(mean, cov)` conditioned on `lower <= x <= upper` (componentwise).
/// Returns the draw and the number of proposals it took.
pub fn sample_truncated_mvn<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    lower: &[f64],
    upper: &[f64],
) -> Result<(DVector<f64>, usize)> {
    let d = mean.len();
    if lower.iter().all(|v| *v == f64::NEG_INFINITY) && upper.iter().all(|v| *v == f64::INFINITY) {
        return Ok((draw_mvn(rng, mean, cov), 1));
    }
    let l: Vec<f64> = (0..d).map(|i| lower[i] - mean[i]).collect();
    let u: Vec<f64> = (0..d).map(|i| upper[i] - mean[i]).collect();
    if d == 1 {
        let sd = libm::sqrt(cov[(0, 0)]);
        let z = truncated_standard_normal(rng, l[0] / sd, u[0] / sd);
        return Ok((DVector::from_element(1, mean[0] + sd * z), 1));
    }
    let mut sigma = cov.clone();
    symmetrize(&mut sigma);
    let (chol, perm, lp, up) = permuted_cholesky(&sigma, &l, &u)?;
    let diag: Vec<f64> = (0..d).map(|i| chol[(i, i)]).collect();
    // Unit-diagonal factor with the diagonal removed, limits rescaled.
    let scaled = DMatrix::from_fn(d, d, |i, j| if i == j { 0.0 } else { chol[(i, j)] / diag[i] });
    let ls: Vec<f64> = (0..d).map(|i| lp[i] / diag[i]).collect();
    let us: Vec<f64> = (0..d).map(|i| up[i] / diag[i]).collect();

    // Without a converged saddle point the untilted proposal is used; its log
    // weight is a sum of log probabilities and hence bounded by zero.
    let (mu, psi_star) = match solve_tilting(&scaled, &ls, &us) {
        Some((x, mu)) => {
            let p = psi(&x, &mu, &scaled, &ls, &us);
            (mu, p)
        }
        None => (vec![0.0; d], 0.0),
    };
    for attempt in 1..=MAX_PROPOSALS {
        let (log_weight, z) = tilted_proposal(rng, &scaled, &ls, &us, &mu);
        if -libm::log(open_uniform(rng)) > psi_star - log_weight {
            let x = &chol * DVector::from_vec(z);
            let mut out = mean.clone();
            for (k, &p) in perm.iter().enumerate() {
                out[p] += x[k];
            }
            return Ok((out, attempt));
        }
    }
    Err(Error::StuckRegion { column: usize::MAX, rate: 0.0 })
}

/// Cholesky factorization with the most constrained variables ordered first.
/// Returns `(L, perm, lower, upper)` in permuted order.
fn permuted_cholesky(sigma: &DMatrix<f64>, lower: &[f64], upper: &[f64]) -> Result<(DMatrix<f64>, Vec<usize>, Vec<f64>, Vec<f64>)> {
    let d = lower.len();
    let mut s = sigma.clone();
    let mut l = lower.to_vec();
    let mut u = upper.to_vec();
    let mut perm: Vec<usize> = (0..d).collect();
    let mut chol = DMatrix::<f64>::zeros(d, d);
    let mut z = vec![0.0; d];
    for j in 0..d {
        let mut best = j;
        let mut best_pr = f64::INFINITY;
        for i in j..d {
            let mut var = s[(i, i)];
            let mut shift = 0.0;
            for k in 0..j {
                var -= chol[(i, k)] * chol[(i, k)];
                shift += chol[(i, k)] * z[k];
            }
            let sd = libm::sqrt(var.max(f64::EPSILON));
            let pr = ln_normal_prob((l[i] - shift) / sd, (u[i] - shift) / sd);
            if pr < best_pr {
                best_pr = pr;
                best = i;
            }
        }
        if best != j {
            s.swap_rows(j, best);
            s.swap_columns(j, best);
            chol.swap_rows(j, best);
            l.swap(j, best);
            u.swap(j, best);
            perm.swap(j, best);
        }
        let mut piv = s[(j, j)];
        for k in 0..j {
            piv -= chol[(j, k)] * chol[(j, k)];
        }
        if piv < -0.01 * s[(j, j)].abs().max(1e-300) {
            return Err(Error::SingularPosterior("truncated normal covariance is not positive semi-definite".into()));
        }
        let root = libm::sqrt(piv.max(f64::EPSILON));
        chol[(j, j)] = root;
        for i in j + 1..d {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= chol[(i, k)] * chol[(j, k)];
            }
            chol[(i, j)] = v / root;
        }
        let mut shift = 0.0;
        for k in 0..j {
            shift += chol[(j, k)] * z[k];
        }
        let tl = (l[j] - shift) / root;
        let tu = (u[j] - shift) / root;
        let w = ln_normal_prob(tl, tu);
        z[j] = (libm::exp(-0.5 * tl * tl - w) - libm::exp(-0.5 * tu * tu - w)) / SQRT_2PI;
        if !z[j].is_finite() {
            z[j] = 0.0;
        }
    }
    Ok((chol, perm, l, u))
}

/// Tilting objective at `(x, mu)` (last components of both are zero).
fn psi(x: &[f64], mu: &[f64], scaled: &DMatrix<f64>, l: &[f64], u: &[f64]) -> f64 {
    let d = l.len();
    let mut total = 0.0;
    for k in 0..d {
        let c: f64 = (0..d).map(|j| scaled[(k, j)] * x[j]).sum();
        total += ln_normal_prob(l[k] - mu[k] - c, u[k] - mu[k] - c) + 0.5 * mu[k] * mu[k] - x[k] * mu[k];
    }
    total
}

/// Gradient and Jacobian of the tilting objective in the free coordinates
/// `(x_1..x_{d-1}, mu_1..mu_{d-1})`.
fn gradient(y: &[f64], scaled: &DMatrix<f64>, l: &[f64], u: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let d = l.len();
    let m = d - 1;
    let mut x = vec![0.0; d];
    let mut mu = vec![0.0; d];
    x[..m].copy_from_slice(&y[..m]);
    mu[..m].copy_from_slice(&y[m..]);
    let mut lt = vec![0.0; d];
    let mut ut = vec![0.0; d];
    let mut p = vec![0.0; d];
    let mut pl = vec![0.0; d];
    let mut pu = vec![0.0; d];
    for k in 0..d {
        let c: f64 = (0..d).map(|j| scaled[(k, j)] * x[j]).sum();
        lt[k] = l[k] - mu[k] - c;
        ut[k] = u[k] - mu[k] - c;
        let w = ln_normal_prob(lt[k], ut[k]);
        pl[k] = if lt[k].is_finite() { libm::exp(-0.5 * lt[k] * lt[k] - w) / SQRT_2PI } else { 0.0 };
        pu[k] = if ut[k].is_finite() { libm::exp(-0.5 * ut[k] * ut[k] - w) / SQRT_2PI } else { 0.0 };
        p[k] = pl[k] - pu[k];
    }
    let mut grad = vec![0.0; 2 * m];
    for j in 0..m {
        let lp: f64 = (0..d).map(|k| p[k] * scaled[(k, j)]).sum();
        grad[j] = -mu[j] + lp;
        grad[m + j] = mu[j] - x[j] + p[j];
    }
    let dp: Vec<f64> = (0..d)
        .map(|k| {
            let a = if lt[k].is_finite() { lt[k] } else { 0.0 };
            let b = if ut[k].is_finite() { ut[k] } else { 0.0 };
            -p[k] * p[k] + a * pl[k] - b * pu[k]
        })
        .collect();
    let dl = DMatrix::from_fn(d, d, |i, j| dp[i] * scaled[(i, j)]);
    let xx = scaled.transpose() * &dl;
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            jac[(i, j)] = xx[(i, j)];
            let mx = if i == j { -1.0 } else { 0.0 } + dl[(i, j)];
            // Lower-left block is mx, upper-right is its transpose.
            jac[(m + i, j)] = mx;
            jac[(j, m + i)] = mx;
        }
        jac[(m + i, m + i)] = 1.0 + dp[i];
    }
    (grad, jac)
}

/// Newton iterations with backtracking for the saddle point of the tilting
/// objective. `None` when the iteration does not converge.
fn solve_tilting(scaled: &DMatrix<f64>, l: &[f64], u: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let d = l.len();
    let m = d - 1;
    let mut y = vec![0.0; 2 * m];
    let norm = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();
    let (mut g, mut jac) = gradient(&y, scaled, l, u);
    let mut current = norm(&g);
    for _ in 0..100 {
        if current < 1e-20 {
            break;
        }
        let step = jac.clone().lu().solve(&DVector::from_column_slice(&g))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let (gt, jt) = gradient(&trial, scaled, l, u);
            let nt = norm(&gt);
            if nt.is_finite() && nt < current {
                y = trial;
                g = gt;
                jac = jt;
                current = nt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(current < 1e-12) || y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut x = vec![0.0; d];
    let mut mu = vec![0.0; d];
    x[..m].copy_from_slice(&y[..m]);
    mu[..m].copy_from_slice(&y[m..]);
    Some((x, mu))
}

/// One draw from the tilted sequential proposal and its log importance weight.
fn tilted_proposal<R: Rng + ?Sized>(rng: &mut R, scaled: &DMatrix<f64>, l: &[f64], u: &[f64], mu: &[f64]) -> (f64, Vec<f64>) {
    let d = l.len();
    let mut z = vec![0.0; d];
    let mut log_weight = 0.0;
    for k in 0..d {
        let c: f64 = (0..k).map(|j| scaled[(k, j)] * z[j]).sum();
        let tl = l[k] - mu[k] - c;
        let tu = u[k] - mu[k] - c;
        z[k] = mu[k] + truncated_standard_normal(rng, tl, tu);
        log_weight += ln_normal_prob(tl, tu) + 0.5 * mu[k] * mu[k] - mu[k] * z[k];
    }
    (log_weight, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{step_rng, Step};
    use crate::special::{normal_cdf, normal_pdf};

    #[test]
    fn bivariate_orthant_moments() {
        // X ~ N(0, [[1, rho], [rho, 1]]) restricted to X1 > 0: E[X2] = rho * sqrt(2/pi).
        let rho = 0.6;
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let mean = DVector::zeros(2);
        let mut rng = step_rng(5, 0, Step::Simulation);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            let (x, _) = sample_truncated_mvn(&mut rng, &mean, &cov, &[0.0, f64::NEG_INFINITY], &[f64::INFINITY, f64::INFINITY]).unwrap();
            assert!(x[0] >= 0.0);
            s += x[1];
        }
        let expected = rho * libm::sqrt(2.0 / core::f64::consts::PI);
        assert!((s / n as f64 - expected).abs() < 4.0 / libm::sqrt(n as f64));
    }

    #[test]
    fn univariate_truncation_mean() {
        // N(1, 4) truncated to [2, 5]: mean = mu + sd * (phi(a) - phi(b)) / (Phi(b) - Phi(a)).
        let mean = DVector::from_element(1, 1.0);
        let cov = DMatrix::from_element(1, 1, 4.0);
        let mut rng = step_rng(6, 0, Step::Simulation);
        let n = 100_000;
        let mut s = 0.0;
        for _ in 0..n {
            s += sample_truncated_mvn(&mut rng, &mean, &cov, &[2.0], &[5.0]).unwrap().0[0];
        }
        let (a, b) = (0.5, 2.0);
        let expected = 1.0 + 2.0 * (normal_pdf(a) - normal_pdf(b)) / (normal_cdf(b) - normal_cdf(a));
        assert!((s / n as f64 - expected).abs() < 0.01);
    }

    #[test]
    fn far_tail_box_in_three_dimensions() {
        // Strongly correlated trivariate normal restricted to an orthant far
        // from its mean; plain rejection would essentially never succeed.
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.8, 0.5, 0.8, 1.0, 0.6, 0.5, 0.6, 1.0]);
        let mean = DVector::from_column_slice(&[-4.0, 0.0, 3.0]);
        let mut rng = step_rng(7, 0, Step::Simulation);
        let lo = [0.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
        let hi = [f64::INFINITY, f64::INFINITY, 0.0];
        let mut tries = 0;
        for _ in 0..2_000 {
            let (x, t) = sample_truncated_mvn(&mut rng, &mean, &cov, &lo, &hi).unwrap();
            assert!(x[0] >= 0.0 && x[2] <= 0.0);
            tries += t;
        }
        assert!(tries < 20_000, "tilted proposals accepted too rarely: {tries}");
    }
}
