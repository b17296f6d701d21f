use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spec::{Block, Dimensions};

/// Measurement-equation coefficients of one panel.
///
/// `factor[(i, p)]` is the loading of series `i` on the block factor at lag
/// `p`; `channel[(i, p * channels + k)]` is the loading on channel `k` at lag
/// `p`. Row 0 is the euro-area aggregate: unit contemporaneous factor loading
/// and no channel loadings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLoadings {
    #[serde(with = "crate::serde_matrix")]
    pub factor: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub channel: DMatrix<f64>,
}

impl FactorLoadings {
    pub fn normalized(dims: &Dimensions) -> Self {
        let mut factor = DMatrix::zeros(dims.series_per_block, dims.factor_lags + 1);
        factor[(0, 0)] = 1.0;
        FactorLoadings {
            factor,
            channel: DMatrix::zeros(dims.series_per_block, (dims.factor_lags + 1) * dims.channels),
        }
    }

    /// Common-component prediction of series `i` at time `t` (needs `t >= P`).
    pub fn predict(&self, i: usize, t: usize, factor: &[f64], channels: &DMatrix<f64>) -> f64 {
        let lags = self.factor.ncols();
        let nz = channels.ncols();
        let mut v = 0.0;
        for p in 0..lags {
            v += self.factor[(i, p)] * factor[t - p];
            for k in 0..nz {
                v += self.channel[(i, p * nz + k)] * channels[(t - p, k)];
            }
        }
        v
    }
}

pub const MIN_INNOVATION_VARIANCE: f64 = 1e-8;

/// Stochastic-volatility state of one series: random-walk log variance with
/// horseshoe-distributed innovation variances `global * local[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogVolatility {
    pub initial: f64,
    pub path: Vec<f64>,
    pub global: f64,
    pub global_aux: f64,
    pub local: Vec<f64>,
    pub local_aux: Vec<f64>,
}

impl LogVolatility {
    pub fn constant(level: f64, periods: usize) -> Self {
        LogVolatility {
            initial: level,
            path: vec![level; periods],
            global: 1.0,
            global_aux: 1.0,
            local: vec![1.0; periods],
            local_aux: vec![1.0; periods],
        }
    }

    /// Innovation variance of `h_t - h_{t-1}`, floored at
    /// [`MIN_INNOVATION_VARIANCE`] so the random-walk precision stays
    /// numerically positive definite when the horseshoe shrinks hard.
    pub fn innovation_variance(&self, t: usize) -> f64 {
        (self.global * self.local[t]).max(MIN_INNOVATION_VARIANCE)
    }
}

/// Reduced-form coefficients, impact matrix and Minnesota shrinkage.
///
/// `coefficients` has one column per equation; row 0 holds the constant and
/// row `1 + (l - 1) * n + j` the coefficient on variable `j` at lag `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarParameters {
    #[serde(with = "crate::serde_matrix")]
    pub coefficients: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub impact: DMatrix<f64>,
    pub kappa: [f64; 2],
}

impl VarParameters {
    pub fn lags(&self) -> usize {
        (self.coefficients.nrows() - 1) / self.impact.nrows()
    }

    /// `A_l` as an `n x n` matrix (row = equation).
    pub fn lag_matrix(&self, l: usize) -> DMatrix<f64> {
        let n = self.impact.nrows();
        DMatrix::from_fn(n, n, |i, j| self.coefficients[(1 + (l - 1) * n + j, i)])
    }

    pub fn constant(&self, i: usize) -> f64 {
        self.coefficients[(0, i)]
    }

    /// Reduced-form residual covariance `B B'`.
    pub fn residual_covariance(&self) -> DMatrix<f64> {
        &self.impact * self.impact.transpose()
    }
}

/// Full Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcState {
    pub loadings: [FactorLoadings; 2],
    /// Output series first, then inflation series.
    pub volatility: Vec<LogVolatility>,
    /// Columns: output factor, inflation factor.
    #[serde(with = "crate::serde_matrix")]
    pub factors: DMatrix<f64>,
    pub var: VarParameters,
    /// Residual variances of univariate autoregressions, one per endogenous
    /// variable, fixed at initialization and used to scale the Minnesota prior.
    pub minnesota_scale: Vec<f64>,
    /// Prior means of the factors in the first lag window.
    #[serde(with = "crate::serde_matrix")]
    pub factor_prior_mean: DMatrix<f64>,
}

impl McmcState {
    pub fn loadings(&self, block: Block) -> &FactorLoadings {
        &self.loadings[block.index()]
    }

    pub fn factor_column(&self, block: Block) -> Vec<f64> {
        self.factors.column(block.index()).iter().copied().collect()
    }
}
