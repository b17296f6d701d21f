//! Regression-based temporal disaggregation of a quarterly series with
//! monthly indicators and AR(1) monthly residuals.

use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::{Frequency, RawSeries};
use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// How the three monthly values relate to the quarterly observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Average,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChowLinOptions {
    pub aggregation: Aggregation,
    /// Fixed residual autocorrelation; `None` estimates it by maximum
    /// likelihood on the grid -0.99, -0.98, ..., 0.99.
    pub rho: Option<f64>,
}

impl Default for ChowLinOptions {
    fn default() -> Self {
        ChowLinOptions { aggregation: Aggregation::Average, rho: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChowLinFit {
    pub series: RawSeries,
    pub rho: f64,
    /// Constant first, then one coefficient per retained indicator.
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
}

struct Evaluation {
    beta: DVector<f64>,
    residual: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_likelihood: f64,
}

/// Disaggregate `quarterly` to monthly frequency so that every quarter's
/// monthly values aggregate back to the quarterly observation exactly.
///
/// Indicators are regressed jointly together with a constant; indicators
/// that are constant over the sample are dropped since they duplicate it.
pub fn chow_lin_interpolate(quarterly: &RawSeries, indicators: &[RawSeries], options: &ChowLinOptions) -> Result<ChowLinFit> {
    quarterly.validate()?;
    if quarterly.frequency != Frequency::Quarterly {
        return Err(Error::InvalidInput(alloc::format!("{} is not quarterly", quarterly.name)));
    }
    if indicators.is_empty() {
        return Err(Error::InvalidInput("at least one monthly indicator is required".into()));
    }
    let nq = quarterly.len();
    if nq == 0 {
        return Err(Error::SeriesTooShort { needed: 1, got: 0 });
    }
    let start = quarterly.dates[0].month();
    let months = 3 * nq;

    let mut columns: Vec<Vec<f64>> = alloc::vec![alloc::vec![1.0; months]];
    for ind in indicators {
        ind.validate()?;
        if ind.frequency != Frequency::Monthly {
            return Err(Error::InvalidInput(alloc::format!("indicator {} is not monthly", ind.name)));
        }
        let first = ind.dates.first().map(|d| d.month().index()).unwrap_or(i64::MAX);
        let offset = start.index() - first;
        if offset < 0 || offset as usize + months > ind.len() {
            return Err(Error::CoverageGap(alloc::format!(
                "indicator {} does not cover {} to {}",
                ind.name,
                start,
                start.offset(months as i64 - 1)
            )));
        }
        let values = ind.values[offset as usize..offset as usize + months].to_vec();
        if crate::stats::variance(&values) > 0.0 {
            columns.push(values);
        }
    }
    let x = DMatrix::from_fn(months, columns.len(), |t, c| columns[c][t]);
    let weight = match options.aggregation {
        Aggregation::Average => 1.0 / 3.0,
        Aggregation::Sum => 1.0,
    };
    let cx = DMatrix::from_fn(nq, x.ncols(), |q, c| weight * (0..3).map(|k| x[(3 * q + k, c)]).sum::<f64>());
    let y = DVector::from_column_slice(&quarterly.values);

    let (rho, eval) = match options.rho {
        Some(rho) => {
            if !(rho.abs() < 1.0) {
                return Err(Error::InvalidInput(alloc::format!("autocorrelation {rho} outside (-1, 1)")));
            }
            (rho, evaluate(rho, &y, &cx, weight)?)
        }
        None => {
            let mut best: Option<(f64, Evaluation)> = None;
            for k in -99..=99 {
                let rho = k as f64 / 100.0;
                let e = evaluate(rho, &y, &cx, weight)?;
                if best.as_ref().map_or(true, |(_, b)| e.log_likelihood > b.log_likelihood) {
                    best = Some((rho, e));
                }
            }
            best.expect("grid is not empty")
        }
    };

    // Monthly path: X beta + V C' W^-1 u.
    let w_inv_u = eval.chol.solve(&eval.residual);
    let fitted = &x * &eval.beta;
    let scale = 1.0 / (1.0 - rho * rho);
    let values: Vec<f64> = (0..months)
        .map(|t| {
            let mut alloc_part = 0.0;
            for q in 0..nq {
                let vc: f64 = (0..3).map(|k| libm::pow(rho, (t as f64 - (3 * q + k) as f64).abs())).sum();
                alloc_part += weight * scale * vc * w_inv_u[q];
            }
            fitted[t] + alloc_part
        })
        .collect();
    let mut series = RawSeries::monthly(quarterly.name.clone(), start, values);
    series.frequency = Frequency::Monthly;
    Ok(ChowLinFit { series, rho, coefficients: eval.beta.iter().copied().collect(), log_likelihood: eval.log_likelihood })
}

/// GLS fit and concentrated log likelihood at a given autocorrelation.
fn evaluate(rho: f64, y: &DVector<f64>, cx: &DMatrix<f64>, weight: f64) -> Result<Evaluation> {
    let nq = y.len();
    let scale = 1.0 / (1.0 - rho * rho);
    let w = DMatrix::from_fn(nq, nq, |a, b| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += libm::pow(rho, ((3 * a + i) as f64 - (3 * b + j) as f64).abs());
            }
        }
        weight * weight * scale * s
    });
    let chol = Cholesky::new(w).ok_or_else(|| Error::SingularRegression("aggregated residual covariance".into()))?;
    let l = chol.l();
    let ly = l.solve_lower_triangular(y).expect("Cholesky factor is invertible");
    let lx = l.solve_lower_triangular(cx).expect("Cholesky factor is invertible");
    let beta = least_squares(&lx, &ly)?;
    let residual = y - cx * &beta;
    let white = l.solve_lower_triangular(&residual).expect("Cholesky factor is invertible");
    let quad = white.norm_squared();
    let log_det: f64 = 2.0 * l.diagonal().iter().map(|v| libm::log(*v)).sum::<f64>();
    let n = nq as f64;
    let log_likelihood = -0.5 * n * libm::log((quad / n).max(f64::MIN_POSITIVE)) - 0.5 * log_det;
    Ok(Evaluation { beta, residual, chol, log_likelihood })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::Month;

    fn start() -> Month {
        Month::parse("2001-01").unwrap()
    }

    #[test]
    fn constant_inputs_give_constant_output() {
        let q = RawSeries::quarterly("gdp", start(), alloc::vec![5.0; 6]);
        let ind = RawSeries::monthly("ip", start(), alloc::vec![2.0; 18]);
        let fit = chow_lin_interpolate(&q, &[ind], &ChowLinOptions::default()).unwrap();
        assert!(fit.series.values.iter().all(|v| (v - 5.0).abs() < 1e-10));
    }

    #[test]
    fn missing_indicator_months_are_reported() {
        let q = RawSeries::quarterly("gdp", start(), alloc::vec![1.0, 2.0, 3.0]);
        let ind = RawSeries::monthly("ip", start().offset(1), (0..9).map(|v| v as f64).collect());
        assert!(matches!(chow_lin_interpolate(&q, &[ind], &ChowLinOptions::default()), Err(Error::CoverageGap(_))));
    }

    #[test]
    fn sum_matching() {
        let q = RawSeries::quarterly("gdp", start(), alloc::vec![3.0, 7.0, 4.0, 9.0]);
        let ind = RawSeries::monthly("ip", start(), (0..12).map(|v| libm::sin(v as f64)).collect());
        let opts = ChowLinOptions { aggregation: Aggregation::Sum, rho: None };
        let fit = chow_lin_interpolate(&q, &[ind], &opts).unwrap();
        for k in 0..4 {
            let s: f64 = fit.series.values[3 * k..3 * k + 3].iter().sum();
            assert!((s - q.values[k]).abs() < 1e-9);
        }
    }
}
