use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{inverse, lagged_design, SvarLayout};
use crate::error::{Error, Result};
use crate::linalg::{draw_from_precision, least_squares};
use crate::model::VarParameters;

/// Minnesota prior mean and variance of the coefficient of equation `i` on
/// variable `j` at lag `l` (both endogenous).
pub fn minnesota_moments(layout: &SvarLayout, kappa: [f64; 2], scale: &[f64], i: usize, j: usize, l: usize) -> (f64, f64) {
    let l2 = (l * l) as f64;
    if i == j {
        let mean = if l == 1 { layout.own_lag_mean[i] } else { 0.0 };
        (mean, kappa[0] / l2)
    } else {
        (0.0, kappa[0] * kappa[1] * scale[i] / (l2 * scale[j]))
    }
}

/// Draw the VAR coefficients equation by equation given the impact matrix.
///
/// With structural errors `eps_t = B^-1 u_t`, equation `i` enters every
/// structural error through column `i` of `B^-1`, so its conditional
/// posterior is Gaussian with precision `(c_i'c_i) X'X + V^-1` restricted to
/// the free regressors.
pub fn sample_var_coefficients<R: Rng + ?Sized>(
    rng: &mut R,
    y: &DMatrix<f64>,
    layout: &SvarLayout,
    var: &mut VarParameters,
    scale: &[f64],
) -> Result<()> {
    let (lhs, x) = lagged_design(y, layout.lags);
    let b_inv = inverse(&var.impact, "impact matrix")?;
    let xtx = x.transpose() * &x;
    for i in 0..layout.system {
        let c = b_inv.column(i).into_owned();
        let cc = c.dot(&c);
        // Residuals excluding equation i's own fit, mapped to structural units.
        let mut partial = var.coefficients.clone();
        partial.column_mut(i).fill(0.0);
        let w = (&lhs - &x * &partial) * b_inv.transpose();
        let target = &w * &c;
        let xt_target = x.transpose() * target;

        let rows = layout.free_rows(i);
        let k = rows.len();
        let mut precision = DMatrix::from_fn(k, k, |a, b| cc * xtx[(rows[a], rows[b])]);
        let mut linear = DVector::from_fn(k, |a, _| xt_target[rows[a]]);
        let (means, variances) = coefficient_prior(layout, var.kappa, scale, i, &rows);
        for a in 0..k {
            precision[(a, a)] += 1.0 / variances[a];
            linear[a] += means[a] / variances[a];
        }
        let draw = draw_from_precision(rng, precision, &linear, "VAR coefficients")?;
        var.coefficients.column_mut(i).fill(0.0);
        for (a, row) in rows.iter().enumerate() {
            var.coefficients[(*row, i)] = draw[a];
        }
    }
    Ok(())
}

/// Residual variance of an AR(`lags`) regression with intercept for every
/// column of `y`, with degrees-of-freedom correction.
pub fn compute_minnesota_scales(y: &DMatrix<f64>, lags: usize) -> Result<Vec<f64>> {
    if lags == 0 {
        return Err(Error::InvalidInput("the autoregressions need at least one lag".into()));
    }
    let t = y.nrows();
    let k = lags + 1;
    if t < lags + k + 1 {
        return Err(Error::SeriesTooShort { needed: lags + k + 1, got: t });
    }
    let rows = t - lags;
    (0..y.ncols())
        .map(|j| {
            let x = DMatrix::from_fn(rows, k, |s, c| if c == 0 { 1.0 } else { y[(lags + s - c, j)] });
            let target = DVector::from_fn(rows, |s, _| y[(lags + s, j)]);
            let beta = least_squares(&x, &target)?;
            let resid = &target - &x * beta;
            Ok(resid.norm_squared() / (rows - k) as f64)
        })
        .collect()
}

fn coefficient_prior(layout: &SvarLayout, kappa: [f64; 2], scale: &[f64], i: usize, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = layout.system;
    let mut means = Vec::with_capacity(rows.len());
    let mut variances = Vec::with_capacity(rows.len());
    for &row in rows {
        if row == 0 {
            means.push(0.0);
            variances.push(layout.constant_variance);
        } else {
            let l = (row - 1) / n + 1;
            let j = (row - 1) % n;
            let (m, v) = minnesota_moments(layout, kappa, scale, i, j, l);
            means.push(m);
            variances.push(v);
        }
    }
    (means, variances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ImpactPattern, ScaleProposal};

    #[test]
    fn minnesota_variances() {
        let layout = SvarLayout {
            system: 3,
            endogenous: 3,
            lags: 2,
            own_lag_mean: alloc::vec![0.0, 0.0, 1.0],
            constant_variance: 1e4,
            kappa_max: 10.0,
            pattern: ImpactPattern::new(3),
            scale_proposal: ScaleProposal::FullConditional,
        };
        let scale = [1.0, 4.0, 0.25];
        assert_eq!(minnesota_moments(&layout, [0.2, 0.5], &scale, 2, 2, 1), (1.0, 0.2));
        assert_eq!(minnesota_moments(&layout, [0.2, 0.5], &scale, 0, 0, 1), (0.0, 0.2));
        assert_eq!(minnesota_moments(&layout, [0.2, 0.5], &scale, 2, 2, 2), (0.0, 0.05));
        let (_, v) = minnesota_moments(&layout, [0.2, 0.5], &scale, 1, 2, 2);
        assert!((v - 0.2 * 0.5 * 4.0 / (4.0 * 0.25)).abs() < 1e-15);
    }
}
