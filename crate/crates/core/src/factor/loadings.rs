//! Conjugate draws of the measurement-equation loadings.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::Result;
use crate::linalg::draw_from_precision;
use crate::model::{FactorLoadings, LogVolatility};

/// Inputs of one panel's loading regressions.
pub struct LoadingProblem<'a> {
    pub panel: &'a DMatrix<f64>,
    pub factor: &'a [f64],
    pub channels: &'a DMatrix<f64>,
    /// Log-volatility states of the panel's series (aggregate first).
    pub volatility: &'a [LogVolatility],
    pub factor_lags: usize,
    pub country_channels: bool,
    pub loading_variance: f64,
    pub channel_loading_variance: f64,
}

impl LoadingProblem<'_> {
    /// Regressors of period `t`: factor lags `0..=P`, then channel lags if enabled.
    pub fn regressors(&self, t: usize) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.regressor_count());
        for p in 0..=self.factor_lags {
            row.push(self.factor[t - p]);
        }
        if self.country_channels {
            for p in 0..=self.factor_lags {
                for k in 0..self.channels.ncols() {
                    row.push(self.channels[(t - p, k)]);
                }
            }
        }
        row
    }

    pub fn regressor_count(&self) -> usize {
        let lags = self.factor_lags + 1;
        lags + if self.country_channels { lags * self.channels.ncols() } else { 0 }
    }

    pub fn prior_variances(&self) -> Vec<f64> {
        let lags = self.factor_lags + 1;
        (0..self.regressor_count())
            .map(|k| if k < lags { self.loading_variance } else { self.channel_loading_variance })
            .collect()
    }

    /// Posterior precision and linear term for series `i` (zero prior mean,
    /// weights `exp(-h_t)`).
    pub fn posterior(&self, i: usize) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.regressor_count();
        let mut precision = DMatrix::zeros(k, k);
        let mut linear = DVector::zeros(k);
        for t in self.factor_lags..self.panel.nrows() {
            let z = self.regressors(t);
            let w = libm::exp(-self.volatility[i].path[t]);
            let x = self.panel[(t, i)];
            for a in 0..k {
                linear[a] += w * z[a] * x;
                for b in 0..k {
                    precision[(a, b)] += w * z[a] * z[b];
                }
            }
        }
        for (a, v) in self.prior_variances().iter().enumerate() {
            precision[(a, a)] += 1.0 / v;
        }
        (precision, linear)
    }
}

/// Draw the loadings of every country series; the aggregate (row 0) keeps
/// its unit contemporaneous loading and zero lag and channel loadings.
pub fn sample_loadings<R: Rng + ?Sized>(rng: &mut R, problem: &LoadingProblem<'_>, loadings: &mut FactorLoadings) -> Result<()> {
    let lags = problem.factor_lags + 1;
    let nz = problem.channels.ncols();
    for i in 1..problem.panel.ncols() {
        let (precision, linear) = problem.posterior(i);
        let draw = draw_from_precision(rng, precision, &linear, "loadings")?;
        for p in 0..lags {
            loadings.factor[(i, p)] = draw[p];
        }
        if problem.country_channels {
            for c in 0..lags * nz {
                loadings.channel[(i, c)] = draw[lags + c];
            }
        }
    }
    Ok(())
}
