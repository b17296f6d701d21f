//! Additive-outlier detection and replacement against an autoregression
//! selected by BIC.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RawSeries;
use crate::calendar::Day;
use crate::error::{Error, Result};
use crate::linalg::least_squares;

pub const DEFAULT_CRITICAL_VALUE: f64 = 3.5;
const MAX_ORDER: usize = 12;
const MIN_LENGTH: usize = 36;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierEntry {
    pub date: Day,
    pub original: f64,
    pub adjusted: f64,
    pub statistic: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub series: alloc::string::String,
    pub entries: Vec<OutlierEntry>,
}

/// Fitted autoregression: intercept, lag coefficients and a robust scale of
/// the residuals.
struct ArFit {
    intercept: f64,
    phi: Vec<f64>,
    sigma: f64,
}

impl ArFit {
    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let p = self.phi.len();
        (p..x.len())
            .map(|t| x[t] - self.intercept - (0..p).map(|l| self.phi[l] * x[t - 1 - l]).sum::<f64>())
            .collect()
    }
}

/// Repeatedly fit an autoregression, test every period for an additive
/// outlier and replace the most significant one by its model-implied value,
/// until no statistic exceeds `critical_value` in absolute value.
pub fn adjust_additive_outliers(series: &RawSeries, critical_value: f64) -> Result<(RawSeries, OutlierReport)> {
    series.validate()?;
    let n = series.len();
    if n < MIN_LENGTH {
        return Err(Error::SeriesTooShort { needed: MIN_LENGTH, got: n });
    }
    let original = series.values.clone();
    let mut x = original.clone();
    let mut flagged: Vec<(usize, f64)> = Vec::new();
    for _ in 0..n {
        let fit = select_ar(&x)?;
        let Some((t, omega, stat)) = largest_statistic(&x, &fit) else { break };
        if !(stat.abs() > critical_value) {
            break;
        }
        x[t] -= omega;
        match flagged.iter_mut().find(|(k, _)| *k == t) {
            Some(entry) => entry.1 = stat,
            None => flagged.push((t, stat)),
        }
    }
    flagged.sort_by_key(|(t, _)| *t);
    let entries = flagged
        .into_iter()
        .filter(|(t, _)| x[*t] != original[*t])
        .map(|(t, statistic)| OutlierEntry { date: series.dates[t], original: original[t], adjusted: x[t], statistic })
        .collect();
    let report = OutlierReport { series: series.name.clone(), entries };
    Ok((series.with_values(series.dates.clone(), x), report))
}

/// Order in `0..=12` minimizing BIC over the common sample `12..T`.
fn select_ar(x: &[f64]) -> Result<ArFit> {
    let n = x.len();
    let rows = n - MAX_ORDER;
    let target = DVector::from_fn(rows, |s, _| x[MAX_ORDER + s]);
    let mut best: Option<(f64, ArFit)> = None;
    for p in 0..=MAX_ORDER {
        let design = DMatrix::from_fn(rows, p + 1, |s, c| if c == 0 { 1.0 } else { x[MAX_ORDER + s - c] });
        let beta = match least_squares(&design, &target) {
            Ok(b) => b,
            Err(_) if p > 0 => continue,
            Err(e) => return Err(e),
        };
        let ssr = (&target - &design * &beta).norm_squared();
        let bic = rows as f64 * libm::log((ssr / rows as f64).max(f64::MIN_POSITIVE)) + (p + 1) as f64 * libm::log(rows as f64);
        if best.as_ref().map_or(true, |(b, _)| bic < *b) {
            let fit = ArFit { intercept: beta[0], phi: beta.iter().skip(1).copied().collect(), sigma: 0.0 };
            best = Some((bic, fit));
        }
    }
    let (_, mut fit) = best.expect("order 0 always fits");
    fit.sigma = robust_scale(&fit.residuals(x));
    Ok(fit)
}

/// `1.4826 * median |e - median(e)|`.
fn robust_scale(e: &[f64]) -> f64 {
    let med = crate::stats::quantile(e, 0.5);
    let dev: Vec<f64> = e.iter().map(|v| (v - med).abs()).collect();
    1.4826 * crate::stats::quantile(&dev, 0.5)
}

/// For every period, the least-squares size of an additive outlier given the
/// AR residuals it would distort, and its t statistic. Returns the period
/// with the largest absolute statistic.
fn largest_statistic(x: &[f64], fit: &ArFit) -> Option<(usize, f64, f64)> {
    if !(fit.sigma > 0.0) {
        return None;
    }
    let p = fit.phi.len();
    let resid = fit.residuals(x);
    // Residual e_t is affected by an outlier at t0 with weight pi_{t - t0}.
    let pi: Vec<f64> = core::iter::once(1.0).chain(fit.phi.iter().map(|v| -v)).collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for t0 in 0..x.len() {
        let (mut num, mut den) = (0.0, 0.0);
        for (j, w) in pi.iter().enumerate() {
            let t = t0 + j;
            if t >= p && t < x.len() {
                num += w * resid[t - p];
                den += w * w;
            }
        }
        if den <= 0.0 {
            continue;
        }
        let omega = num / den;
        let stat = omega * libm::sqrt(den) / fit.sigma;
        if best.map_or(true, |(_, _, s)| stat.abs() > s.abs()) {
            best = Some((t0, omega, stat));
        }
    }
    best
}
