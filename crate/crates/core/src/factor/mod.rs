//! Gibbs steps for the measurement equations: loadings, stochastic
//! volatilities with horseshoe shrinkage, and the factor paths.

pub mod loadings;
pub mod mixture;
pub mod state_space;
pub mod volatility;

pub use loadings::{sample_loadings, LoadingProblem};
pub use state_space::{FilterOutput, StateSpace};
pub use volatility::{random_walk_precision, sample_horseshoe, sample_initial_volatility, sample_log_volatility};

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::model::{Block, McmcState, Model};
use crate::svar::inverse;

/// Variance of the prior on channel components of the first state window.
/// They are pinned by their observations, so the value only needs to be
/// positive.
const CHANNEL_PRIOR_VARIANCE: f64 = 10.0;

/// Loadings of both panels given the factors and volatilities.
pub fn sample_factor_loadings<R: Rng + ?Sized>(rng: &mut R, model: &Model, state: &mut McmcState) -> Result<()> {
    for block in Block::BOTH {
        let factor = state.factor_column(block);
        let problem = LoadingProblem {
            panel: model.data.panel(block),
            factor: &factor,
            channels: &model.data.channels,
            volatility: model.block_volatility(state, block),
            factor_lags: model.dims.factor_lags,
            country_channels: model.spec.country_channels,
            loading_variance: model.priors.loading_variance,
            channel_loading_variance: model.priors.channel_loading_variance,
        };
        let mut loadings = state.loadings[block.index()].clone();
        sample_loadings(rng, &problem, &mut loadings)?;
        state.loadings[block.index()] = loadings;
    }
    Ok(())
}

/// Log-volatility paths of every series given the measurement residuals.
pub fn sample_stochastic_volatilities<R: Rng + ?Sized>(rng: &mut R, model: &Model, state: &mut McmcState) -> Result<()> {
    let n = model.dims.series_per_block;
    for block in Block::BOTH {
        for i in 0..n {
            let resid = model.measurement_residuals(state, block, i);
            let sv = &mut state.volatility[block.index() * n + i];
            sample_log_volatility(rng, sv, &resid, model.dims.factor_lags)?;
        }
    }
    Ok(())
}

/// Initial log volatility of every series.
pub fn sample_sv_initial<R: Rng + ?Sized>(rng: &mut R, model: &Model, state: &mut McmcState) {
    for sv in &mut state.volatility {
        sample_initial_volatility(rng, sv, model.priors.initial_log_volatility_variance);
    }
}

/// Horseshoe scales of every series.
pub fn sample_sv_horseshoe<R: Rng + ?Sized>(rng: &mut R, state: &mut McmcState) -> Result<()> {
    for sv in &mut state.volatility {
        sample_horseshoe(rng, sv)?;
    }
    Ok(())
}

/// State-space form of the factor block given all other parameters.
///
/// The state stacks `(f_out, f_inf, z)` over `max(L, P + 1)` periods. Both
/// panels are noisy observations; channel rows copy their state component
/// exactly. The instrument equations are folded in by conditioning the
/// endogenous innovations on the observed instrument innovations, which
/// gives a time-varying intercept and the Schur-complement covariance.
pub fn build_state_space(model: &Model, state: &McmcState) -> Result<StateSpace> {
    let d = &model.dims;
    let data = &model.data;
    let t_len = data.periods();
    let r = d.endogenous;
    let blocks = d.state_blocks;
    let m = r * blocks;
    let nz = d.channels;
    let n = d.series_per_block;
    let rows = 2 * n + nz;
    let lags_p = d.factor_lags + 1;

    let mut observation = DMatrix::zeros(rows, m);
    let mut obs_data = DMatrix::from_element(t_len, rows, f64::NAN);
    let mut noise_variance = DMatrix::from_element(t_len, rows, 1.0);
    let mut exact_rows = alloc::vec![None; rows];
    for block in Block::BOTH {
        let b = block.index();
        let loadings = state.loadings(block);
        let panel = data.panel(block);
        let vols = model.block_volatility(state, block);
        for i in 0..n {
            let row = b * n + i;
            for p in 0..lags_p {
                observation[(row, p * r + b)] = loadings.factor[(i, p)];
                for k in 0..nz {
                    observation[(row, p * r + 2 + k)] = loadings.channel[(i, p * nz + k)];
                }
            }
            for t in d.factor_lags..t_len {
                obs_data[(t, row)] = panel[(t, i)];
                noise_variance[(t, row)] = libm::exp(vols[i].path[t]);
            }
        }
    }
    for k in 0..nz {
        let row = 2 * n + k;
        observation[(row, 2 + k)] = 1.0;
        exact_rows[row] = Some(2 + k);
        for t in 0..t_len {
            obs_data[(t, row)] = data.channels[(t, k)];
        }
    }

    let var = &state.var;
    let mut transition = DMatrix::zeros(m, m);
    for l in 1..=d.var_lags {
        let a = var.lag_matrix(l);
        transition.view_mut((0, (l - 1) * r), (r, r)).copy_from(&a.view((0, 0), (r, r)));
    }
    for c in r..m {
        transition[(c, c - r)] = 1.0;
    }

    let sigma = var.residual_covariance();
    let k = d.instruments;
    let s_rr = sigma.view((0, 0), (r, r)).into_owned();
    let (innovation_covariance, weights) = if k > 0 {
        let s_rm = sigma.view((0, r), (r, k)).into_owned();
        let s_mm = sigma.view((r, r), (k, k)).into_owned();
        let w = &s_rm * inverse(&s_mm, "instrument innovation covariance")?;
        let mut q = &s_rr - &w * s_rm.transpose();
        crate::linalg::symmetrize(&mut q);
        (q, w)
    } else {
        (s_rr, DMatrix::zeros(r, 0))
    };
    let mut intercepts = DMatrix::zeros(t_len, r);
    for t in 0..t_len {
        let surprise = DVector::from_fn(k, |j, _| data.instruments[(t, j)] - var.constant(r + j));
        let shift = &weights * surprise;
        for i in 0..r {
            intercepts[(t, i)] = var.constant(i) + shift[i];
        }
    }

    let start = blocks - 1;
    let mut prior_mean = DVector::zeros(m);
    let mut prior_covariance = DMatrix::zeros(m, m);
    for q in 0..blocks {
        let time = start - q;
        for c in 0..r {
            let idx = q * r + c;
            if c < 2 {
                prior_mean[idx] = state.factor_prior_mean[(time, c)];
                prior_covariance[(idx, idx)] = model.priors.factor_initial_variance;
            } else {
                prior_covariance[(idx, idx)] = CHANNEL_PRIOR_VARIANCE;
            }
        }
    }

    Ok(StateSpace {
        block_size: r,
        blocks,
        observation,
        transition,
        intercepts,
        innovation_covariance,
        noise_variance,
        data: obs_data,
        exact_rows,
        start,
        prior_mean,
        prior_covariance,
    })
}

/// Draw both factor paths by forward filtering and backward sampling.
pub fn sample_factors<R: Rng + ?Sized>(rng: &mut R, model: &Model, state: &mut McmcState) -> Result<()> {
    let ss = build_state_space(model, state)?;
    let filtered = ss.filter()?;
    let draws = ss.sample_backward(rng, &filtered)?;
    for c in 0..2 {
        let path: Vec<f64> = ss.component_path(&draws, c);
        state.factors.set_column(c, &DVector::from_vec(path));
    }
    Ok(())
}
