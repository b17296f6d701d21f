use super::{Block, McmcState, Model};
use crate::error::Result;
use crate::special::SQRT_2PI;
use crate::svar::{inverse, residuals};

/// Log density of the panels and the VAR variables given the factors and all
/// parameters: measurement equations from period `P` on, VAR from period
/// `L` on.
pub fn complete_data_log_likelihood(model: &Model, state: &McmcState) -> Result<f64> {
    let d = &model.dims;
    let ln_sqrt_2pi = libm::log(SQRT_2PI);
    let mut total = 0.0;
    for block in Block::BOTH {
        let vols = model.block_volatility(state, block);
        for i in 0..d.series_per_block {
            let resid = model.measurement_residuals(state, block, i);
            for (t, e) in resid.iter().enumerate().skip(d.factor_lags) {
                let h = vols[i].path[t];
                total -= ln_sqrt_2pi + 0.5 * h + 0.5 * e * e * libm::exp(-h);
            }
        }
    }

    let y = model.var_observations(&state.factors);
    let u = residuals(&y, &state.var.coefficients, d.var_lags);
    let b_inv = inverse(&state.var.impact, "impact matrix")?;
    let det_inv = b_inv.clone().lu().determinant().abs();
    let eps = &u * b_inv.transpose();
    let rows = u.nrows() as f64;
    total += rows * libm::log(det_inv) - rows * d.system as f64 * ln_sqrt_2pi - 0.5 * eps.norm_squared();
    Ok(total)
}
