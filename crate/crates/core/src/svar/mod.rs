//! Gibbs steps for the structural VAR block: reduced-form coefficients,
//! the restricted impact matrix and the Minnesota shrinkage parameters.

mod coefficients;
mod impact;
mod shrinkage;
pub mod tmvn;

pub use coefficients::{compute_minnesota_scales, minnesota_moments, sample_var_coefficients};
pub use impact::{sample_impact_matrix, ColumnDiagnostics, ImpactDiagnostics, ScaleKernel};
pub use shrinkage::{sample_shrinkage, shrinkage_statistics};

use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ImpactPattern, ScaleProposal};

/// Structure of a VAR whose first `endogenous` variables follow a VAR(L) with
/// Minnesota prior and whose remaining variables (instruments) have no
/// lagged dynamics, only a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvarLayout {
    pub system: usize,
    pub endogenous: usize,
    pub lags: usize,
    /// Prior mean of each endogenous variable's own first lag.
    pub own_lag_mean: Vec<f64>,
    pub constant_variance: f64,
    pub kappa_max: f64,
    pub pattern: ImpactPattern,
    pub scale_proposal: ScaleProposal,
}

impl SvarLayout {
    pub fn regressors(&self) -> usize {
        1 + self.system * self.lags
    }

    /// Row of the coefficient matrix holding variable `j` at lag `l >= 1`.
    pub fn lag_row(&self, l: usize, j: usize) -> usize {
        1 + (l - 1) * self.system + j
    }

    /// Coefficient rows that are estimated in equation `i`.
    pub fn free_rows(&self, i: usize) -> Vec<usize> {
        let mut rows = alloc::vec![0];
        if i < self.endogenous {
            for l in 1..=self.lags {
                for j in 0..self.endogenous {
                    rows.push(self.lag_row(l, j));
                }
            }
        }
        rows
    }

    /// Shapes of the two shrinkage posteriors; both must be positive.
    pub fn shrinkage_shapes(&self) -> (f64, f64) {
        let r = self.endogenous as f64;
        let l = self.lags as f64;
        (r * r * l / 2.0 - 1.0, r * (r - 1.0) * l / 2.0 - 1.0)
    }
}

/// Stack `y_t` (rows `lags..T`) and the regressors `(1, y_{t-1}', ..., y_{t-L}')`.
pub fn lagged_design(y: &DMatrix<f64>, lags: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (t, n) = y.shape();
    let rows = t - lags;
    let lhs = y.rows(lags, rows).into_owned();
    let x = DMatrix::from_fn(rows, 1 + n * lags, |s, c| {
        if c == 0 {
            1.0
        } else {
            let l = (c - 1) / n + 1;
            let j = (c - 1) % n;
            y[(lags + s - l, j)]
        }
    });
    (lhs, x)
}

/// Reduced-form residuals `y_t - A' x_t` for `t >= L`.
pub fn residuals(y: &DMatrix<f64>, coefficients: &DMatrix<f64>, lags: usize) -> DMatrix<f64> {
    let (lhs, x) = lagged_design(y, lags);
    lhs - x * coefficients
}

pub(crate) fn inverse(m: &DMatrix<f64>, context: &str) -> Result<DMatrix<f64>> {
    let inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularPosterior(alloc::format!("{context}: singular matrix")))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularPosterior(alloc::format!("{context}: non-finite inverse")));
    }
    Ok(inv)
}
