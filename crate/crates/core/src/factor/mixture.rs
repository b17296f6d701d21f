//! Seven-component normal mixture approximating `log chi^2_1`.

use rand::Rng;

use crate::random::categorical;

/// Component weights.
pub const WEIGHTS: [f64; 7] = [0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750];
/// Component means before the offset.
pub const MEANS: [f64; 7] = [-10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819];
/// Component variances.
pub const VARIANCES: [f64; 7] = [5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261];
/// Mean shift applied to every component.
pub const OFFSET: f64 = -1.2704;
/// Added to squared residuals before taking logs.
pub const LOG_SQUARE_OFFSET: f64 = 0.0001;

/// `log(e^2 + 0.0001)`.
pub fn log_square(e: f64) -> f64 {
    libm::log(e * e + LOG_SQUARE_OFFSET)
}

/// Draw the mixture component for `e* = h + log eps^2`.
pub fn sample_component<R: Rng + ?Sized>(rng: &mut R, log_square: f64, h: f64) -> usize {
    let mut logw = [0.0; 7];
    let mut top = f64::NEG_INFINITY;
    for k in 0..7 {
        let d = log_square - h - MEANS[k] - OFFSET;
        logw[k] = libm::log(WEIGHTS[k]) - 0.5 * libm::log(VARIANCES[k]) - 0.5 * d * d / VARIANCES[k];
        top = top.max(logw[k]);
    }
    let mut w = [0.0; 7];
    for k in 0..7 {
        w[k] = libm::exp(logw[k] - top);
    }
    categorical(rng, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_matches_log_chi_square_moments() {
        let total: f64 = WEIGHTS.iter().sum();
        let mean: f64 = (0..7).map(|k| WEIGHTS[k] * (MEANS[k] + OFFSET)).sum();
        let second: f64 = (0..7).map(|k| WEIGHTS[k] * (VARIANCES[k] + (MEANS[k] + OFFSET).powi(2))).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((mean - (-1.2704)).abs() < 1e-3);
        let var = second - mean * mean;
        assert!((var - core::f64::consts::PI.powi(2) / 2.0).abs() < 1e-2);
    }
}
