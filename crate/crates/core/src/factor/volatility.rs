//! Random-walk log volatility with horseshoe-distributed innovation variances.

use alloc::vec::Vec;
use rand::Rng;

use super::mixture::{log_square, sample_component, MEANS, OFFSET, VARIANCES};
use crate::error::Result;
use crate::linalg::{draw_from_tridiagonal_precision, Tridiagonal};
use crate::model::LogVolatility;
use crate::random::{inverse_gamma, standard_normal};

/// Precision of the random-walk prior on `h_1..h_T` given `h_0` and the
/// innovation variances, plus the linear term carrying `h_0`.
pub fn random_walk_precision(sv: &LogVolatility) -> (Tridiagonal, Vec<f64>) {
    let t = sv.path.len();
    let inv: Vec<f64> = (0..t).map(|s| 1.0 / sv.innovation_variance(s)).collect();
    let diagonal: Vec<f64> = (0..t).map(|s| inv[s] + if s + 1 < t { inv[s + 1] } else { 0.0 }).collect();
    let off_diagonal: Vec<f64> = (1..t).map(|s| -inv[s]).collect();
    let mut linear = alloc::vec![0.0; t];
    if t > 0 {
        linear[0] = sv.initial * inv[0];
    }
    (Tridiagonal { diagonal, off_diagonal }, linear)
}

/// Draw the mixture indicators and then the whole log-volatility path.
///
/// `residuals[t]` enters only for `t >= observed_from`; earlier periods are
/// driven by the random-walk prior alone.
pub fn sample_log_volatility<R: Rng + ?Sized>(
    rng: &mut R,
    sv: &mut LogVolatility,
    residuals: &[f64],
    observed_from: usize,
) -> Result<()> {
    let (mut precision, mut linear) = random_walk_precision(sv);
    for t in observed_from..residuals.len() {
        let e = log_square(residuals[t]);
        let k = sample_component(rng, e, sv.path[t]);
        precision.diagonal[t] += 1.0 / VARIANCES[k];
        linear[t] += (e - MEANS[k] - OFFSET) / VARIANCES[k];
    }
    sv.path = draw_from_tridiagonal_precision(rng, &precision, &linear)?;
    Ok(())
}

/// Draw `h_0` given `h_1` and its prior variance.
pub fn sample_initial_volatility<R: Rng + ?Sized>(rng: &mut R, sv: &mut LogVolatility, prior_variance: f64) {
    let v1 = sv.innovation_variance(0);
    let precision = 1.0 / v1 + 1.0 / prior_variance;
    let mean = sv.path[0] / v1 / precision;
    sv.initial = mean + standard_normal(rng) / libm::sqrt(precision);
}

/// Draw the horseshoe local and global scales with their auxiliary variables.
pub fn sample_horseshoe<R: Rng + ?Sized>(rng: &mut R, sv: &mut LogVolatility) -> Result<()> {
    let t = sv.path.len();
    let mut sum_scaled = 0.0;
    for s in 0..t {
        let prev = if s == 0 { sv.initial } else { sv.path[s - 1] };
        let dh = sv.path[s] - prev;
        sv.local_aux[s] = inverse_gamma(rng, 1.0, 1.0 + 1.0 / sv.local[s])?;
        sv.local[s] = inverse_gamma(rng, 1.0, 1.0 / sv.local_aux[s] + dh * dh / (2.0 * sv.global))?;
        sum_scaled += dh * dh / sv.local[s];
    }
    sv.global_aux = inverse_gamma(rng, 1.0, 1.0 + 1.0 / sv.global)?;
    sv.global = inverse_gamma(rng, (t as f64 + 1.0) / 2.0, 1.0 / sv.global_aux + 0.5 * sum_scaled)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{step_rng, Step};

    #[test]
    fn tiny_innovations_pin_path_to_initial_level() {
        let mut sv = LogVolatility::constant(0.3, 50);
        sv.global = 1e-14;
        let resid: Vec<f64> = (0..50).map(|t| if t % 2 == 0 { 3.0 } else { -0.1 }).collect();
        let mut rng = step_rng(1, 1, Step::LogVolatility);
        sample_log_volatility(&mut rng, &mut sv, &resid, 0).unwrap();
        // The variance floor still lets the walk drift by sqrt(50 * 1e-8) ~ 7e-4.
        let drift = libm::sqrt(50.0 * crate::model::MIN_INNOVATION_VARIANCE);
        assert!(sv.path.iter().all(|h| (h - 0.3).abs() < 6.0 * drift));
    }

    #[test]
    fn huge_innovation_variance_returns_initial_prior() {
        let mut sv = LogVolatility::constant(5.0, 3);
        sv.global = 1e12;
        let mut rng = step_rng(2, 1, Step::InitialVolatility);
        let n = 50_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            sample_initial_volatility(&mut rng, &mut sv, 10.0);
            s += sv.initial;
            s2 += sv.initial * sv.initial;
        }
        let mean = s / n as f64;
        assert!(mean.abs() < 0.05);
        assert!((s2 / n as f64 - mean * mean - 10.0).abs() < 0.3);
    }
}
