use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{ChannelScale, DataSet, FactorLoadings, ModelSpec, VarParameters};
use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::random::{standard_normal, step_rng, Step};

/// Periods simulated and discarded before the returned sample.
pub const BURN_IN: usize = 100;

/// Parameters of a synthetic data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueParameters {
    pub loadings: [FactorLoadings; 2],
    /// Initial log variance of every measurement error (output series first).
    pub log_volatility: Vec<f64>,
    /// Standard deviation of the log-variance random-walk increments; zero
    /// keeps the variances constant.
    pub volatility_innovation_sd: f64,
    pub var: VarParameters,
}

impl TrueParameters {
    /// A stable reference process for recovery tests and the `simulate`
    /// command: loadings spread over `[0.5, 1.5]`, measurement-error variance
    /// 0.3, persistent channels, a policy shock that lowers both factors and
    /// raises the policy rate, and instrument `j` equal to `0.02 eps_j` plus
    /// noise of standard deviation 0.01.
    pub fn example(spec: &ModelSpec) -> Self {
        let d = spec.dims();
        let (r, n) = (d.endogenous, d.system);
        let mut loadings = [FactorLoadings::normalized(&d), FactorLoadings::normalized(&d)];
        for (b, l) in loadings.iter_mut().enumerate() {
            for i in 1..d.series_per_block {
                let share = i as f64 / d.countries.max(1) as f64;
                l.factor[(i, 0)] = if b == 0 { 0.5 + share } else { 1.5 - share };
                if spec.country_channels {
                    for k in 0..d.channels {
                        l.channel[(i, k)] = if (i + k) % 2 == 0 { 0.2 } else { -0.2 };
                    }
                }
            }
        }
        let mut coefficients = DMatrix::zeros(d.var_regressors(), n);
        let policy = spec.policy_rate_variable();
        for l in 1..=d.var_lags {
            for i in 0..r {
                let own = match (l, i < 2) {
                    (1, true) => 0.5,
                    (1, false) => 0.8,
                    _ => 0.1 * libm::pow(0.5, (l - 2) as f64),
                };
                coefficients[(1 + (l - 1) * n + i, i)] = own;
            }
            if l == 1 {
                coefficients[(1 + policy, 0)] = -0.1;
                coefficients[(1 + policy, 1)] = -0.1;
            }
        }
        // Shock 0 is the policy shock; shock j >= 1 moves variable j - 1 one
        // for one and the later variables by 0.2.
        let mut impact = DMatrix::zeros(n, n);
        for j in 1..r {
            impact[(j - 1, j)] = 1.0;
            for i in j..r {
                impact[(i, j)] = 0.2;
            }
        }
        impact[(0, 0)] = -0.3;
        impact[(1, 0)] = -0.3;
        for i in 2..r {
            impact[(i, 0)] = 0.1;
        }
        impact[(policy, 0)] = 0.5;
        for j in 0..d.instruments {
            impact[(r + j, j)] = 0.02;
            impact[(r + j, r + j)] = 0.01;
        }
        TrueParameters {
            loadings,
            log_volatility: alloc::vec![libm::log(0.3); d.series()],
            volatility_innovation_sd: 0.05,
            var: VarParameters { coefficients, impact, kappa: [1.0, 1.0] },
        }
    }
}

/// Synthetic data set together with the latent paths that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedData {
    pub data: DataSet,
    #[serde(with = "crate::serde_matrix")]
    pub factors: DMatrix<f64>,
    /// One log-variance path per series, output series first.
    pub log_volatility: Vec<Vec<f64>>,
    /// Structural shocks, `T x n`.
    #[serde(with = "crate::serde_matrix")]
    pub shocks: DMatrix<f64>,
}

/// Companion matrix of the lag coefficients of a VAR.
pub fn companion_matrix(var: &VarParameters) -> DMatrix<f64> {
    let n = var.impact.nrows();
    let lags = var.lags();
    let mut c = DMatrix::zeros(n * lags, n * lags);
    for l in 1..=lags {
        c.view_mut((0, (l - 1) * n), (n, n)).copy_from(&var.lag_matrix(l));
    }
    for k in n..n * lags {
        c[(k, k - n)] = 1.0;
    }
    c
}

/// Simulate `periods` months starting January 2003: the VAR with structural
/// shocks `eps_t ~ N(0, I)`, then both panels from the factors (and channels
/// when country channels are active) plus heteroskedastic measurement errors.
pub fn simulate_dgp(spec: &ModelSpec, truth: &TrueParameters, periods: usize, seed: u64) -> Result<SimulatedData> {
    let d = spec.dims();
    let n = d.system;
    if truth.var.impact.shape() != (n, n) || truth.var.coefficients.shape() != (d.var_regressors(), n) {
        return Err(Error::DimensionMismatch("VAR parameters do not match the specification".into()));
    }
    if truth.log_volatility.len() != d.series() {
        return Err(Error::DimensionMismatch("one log variance per series is required".into()));
    }
    for l in &truth.loadings {
        if l.factor.shape() != (d.series_per_block, d.factor_lags + 1)
            || l.channel.shape() != (d.series_per_block, (d.factor_lags + 1) * d.channels)
        {
            return Err(Error::DimensionMismatch("loadings do not match the specification".into()));
        }
    }
    let radius = spectral_radius(&companion_matrix(&truth.var));
    if !(radius < 1.0) {
        return Err(Error::ExplosiveVar(radius));
    }

    let mut rng = step_rng(seed, 0, Step::Simulation);
    let total = periods + BURN_IN;
    let lags = d.var_lags;
    let mut y = DMatrix::zeros(total, n);
    let mut shocks = DMatrix::zeros(total, n);
    for t in 0..total {
        let eps = DVector::from_fn(n, |_, _| standard_normal(&mut rng));
        let mut mean = DVector::from_fn(n, |i, _| truth.var.constant(i));
        for l in 1..=lags.min(t) {
            let lagged = y.row(t - l).transpose();
            mean += truth.var.lag_matrix(l) * lagged;
        }
        let value = mean + &truth.var.impact * &eps;
        y.set_row(t, &value.transpose());
        shocks.set_row(t, &eps.transpose());
    }

    let mut panels = [DMatrix::zeros(periods, d.series_per_block), DMatrix::zeros(periods, d.series_per_block)];
    let mut log_volatility = Vec::with_capacity(d.series());
    let channels_full = y.columns(2, d.channels).into_owned();
    for (b, panel) in panels.iter_mut().enumerate() {
        let factor: Vec<f64> = y.column(b).iter().copied().collect();
        for i in 0..d.series_per_block {
            let mut h = truth.log_volatility[b * d.series_per_block + i];
            let mut path = Vec::with_capacity(periods);
            for s in 0..periods {
                h += truth.volatility_innovation_sd * standard_normal(&mut rng);
                path.push(h);
                let t = s + BURN_IN;
                let common = truth.loadings[b].predict(i, t, &factor, &channels_full);
                panel[(s, i)] = common + libm::exp(0.5 * h) * standard_normal(&mut rng);
            }
            log_volatility.push(path);
        }
    }

    let keep = |m: &DMatrix<f64>| m.rows(BURN_IN, periods).into_owned();
    let start = Month { year: 2003, month: 1 };
    let [output, inflation] = panels;
    let data = DataSet {
        dates: (0..periods as i64).map(|s| start.offset(s)).collect(),
        series_names: (0..d.series_per_block)
            .map(|i| if i == 0 { String::from("EA19") } else { alloc::format!("C{i}") })
            .collect(),
        output,
        inflation,
        channels: keep(&channels_full),
        instruments: y.columns(d.endogenous, d.instruments).rows(BURN_IN, periods).into_owned(),
        channel_scale: alloc::vec![ChannelScale::IDENTITY; d.channels],
    };
    Ok(SimulatedData { data, factors: y.columns(0, 2).rows(BURN_IN, periods).into_owned(), log_volatility, shocks: keep(&shocks) })
}
