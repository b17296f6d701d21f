use nalgebra::DMatrix;
use rand::Rng;

use super::{minnesota_moments, SvarLayout};
use crate::error::{Error, Result};
use crate::random::truncated_inverse_gamma;

/// Smallest scale passed to the inverse-gamma draws, so that a coefficient
/// block sitting exactly on its prior mean cannot collapse `kappa` to zero.
const SCALE_FLOOR: f64 = 1e-10;

/// Sums of scaled squared deviations of the endogenous lag coefficients from
/// their prior means: own-lag terms plus cross terms divided by `kappa[1]`
/// (for `kappa[0]`), and cross terms divided by `kappa[0]` (for `kappa[1]`).
pub fn shrinkage_statistics(layout: &SvarLayout, coefficients: &DMatrix<f64>, kappa: [f64; 2], scale: &[f64]) -> (f64, f64) {
    let mut own = 0.0;
    let mut cross = 0.0;
    for l in 1..=layout.lags {
        let l2 = (l * l) as f64;
        for i in 0..layout.endogenous {
            for j in 0..layout.endogenous {
                let (mean, _) = minnesota_moments(layout, kappa, scale, i, j, l);
                let dev = coefficients[(layout.lag_row(l, j), i)] - mean;
                let base = scale[j] / scale[i] * l2 * dev * dev;
                if i == j {
                    own += base;
                } else {
                    cross += base;
                }
            }
        }
    }
    (own + cross / kappa[1], cross / kappa[0])
}

/// Draw `kappa[0]` then `kappa[1]` from their truncated inverse-gamma
/// conditionals under flat priors on `(0, kappa_max]`.
pub fn sample_shrinkage<R: Rng + ?Sized>(
    rng: &mut R,
    layout: &SvarLayout,
    coefficients: &DMatrix<f64>,
    kappa: &mut [f64; 2],
    scale: &[f64],
) -> Result<()> {
    let (shape1, shape2) = layout.shrinkage_shapes();
    if !(shape1 > 0.0) {
        return Err(Error::NonPositiveShape(shape1));
    }
    if !(shape2 > 0.0) {
        return Err(Error::NonPositiveShape(shape2));
    }
    let (s1, _) = shrinkage_statistics(layout, coefficients, *kappa, scale);
    kappa[0] = truncated_inverse_gamma(rng, shape1, (0.5 * s1).max(SCALE_FLOOR), layout.kappa_max)?;
    let (_, s2) = shrinkage_statistics(layout, coefficients, *kappa, scale);
    kappa[1] = truncated_inverse_gamma(rng, shape2, (0.5 * s2).max(SCALE_FLOOR), layout.kappa_max)?;
    Ok(())
}
