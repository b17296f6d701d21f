//! Monetary-policy instruments from announcement-day market moves.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::calendar::{Day, Month};
use crate::error::{Error, Result};

/// Column of the three-month OIS rate in [`AnnouncementPanel::ois`].
pub const OIS_3M: usize = 1;

/// Per-announcement changes: OIS rates at 1m, 3m, 6m and 1y (percentage
/// points) and the stock index (percent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnouncementPanel {
    pub dates: Vec<Day>,
    #[serde(with = "crate::serde_matrix")]
    pub ois: DMatrix<f64>,
    pub stock: Vec<f64>,
    pub exclusions: Vec<Day>,
}

/// The coordinated rate cut of 8 October 2008.
pub fn default_exclusions() -> Vec<Day> {
    alloc::vec![Day { year: 2008, month: 10, day: 8 }]
}

impl AnnouncementPanel {
    pub fn new(dates: Vec<Day>, ois: DMatrix<f64>, stock: Vec<f64>) -> Self {
        AnnouncementPanel { dates, ois, stock, exclusions: default_exclusions() }
    }

    /// Events left after dropping excluded dates; checks shapes and values.
    pub fn retained(&self) -> Result<AnnouncementPanel> {
        let n = self.dates.len();
        if self.ois.nrows() != n || self.ois.ncols() != 4 || self.stock.len() != n {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{n} events but OIS block {}x{} and {} stock changes",
                self.ois.nrows(),
                self.ois.ncols(),
                self.stock.len()
            )));
        }
        let keep: Vec<usize> = (0..n).filter(|&k| !self.exclusions.contains(&self.dates[k])).collect();
        let ois = DMatrix::from_fn(keep.len(), 4, |a, c| self.ois[(keep[a], c)]);
        let stock: Vec<f64> = keep.iter().map(|&k| self.stock[k]).collect();
        if ois.iter().chain(&stock).any(|v| !v.is_finite()) {
            return Err(Error::DegeneratePanel("missing or non-finite changes".into()));
        }
        Ok(AnnouncementPanel { dates: keep.iter().map(|&k| self.dates[k]).collect(), ois, stock, exclusions: Vec::new() })
    }
}

/// Pure policy surprise `m` and information surprise `cbi` per retained
/// event, with `m + cbi` equal to the first principal component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentPair {
    pub dates: Vec<Day>,
    pub m: Vec<f64>,
    pub cbi: Vec<f64>,
    pub principal_component: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
}

/// First principal component of the centered (unstandardized) OIS changes,
/// signed to load positively on the three-month rate.
pub fn ois_principal_component(ois: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = ois.nrows();
    if n < 3 {
        return Err(Error::DegeneratePanel(alloc::format!("{n} events, at least 3 are needed")));
    }
    let mut centered = ois.clone();
    for j in 0..ois.ncols() {
        let mean = ois.column(j).mean();
        if ois.column(j).iter().all(|v| *v == ois[(0, j)]) {
            return Err(Error::DegeneratePanel(alloc::format!("OIS column {j} has zero variance")));
        }
        centered.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut v = eig.eigenvectors.column(eig.eigenvalues.imax()).into_owned();
    if v[OIS_3M] < 0.0 {
        v.neg_mut();
    }
    Ok((centered * v).iter().copied().collect())
}

/// Split the principal component into policy and information parts with
/// a rotation whose angle is the square root of the variance share of the
/// events where rates and stocks move in opposite directions.
pub fn build_rotational_instrument(panel: &AnnouncementPanel) -> Result<InstrumentPair> {
    let p = panel.retained()?;
    let n = p.dates.len();
    if p.stock.iter().all(|v| *v == p.stock[0]) {
        return Err(Error::DegeneratePanel("stock changes have zero variance".into()));
    }
    let pc = ois_principal_component(&p.ois)?;

    let u = DMatrix::from_fn(n, 2, |t, c| if c == 0 { pc[t] } else { p.stock[t] });
    let qr = u.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for c in 0..2 {
        if r[(c, c)] < 0.0 {
            r.row_mut(c).neg_mut();
            q.column_mut(c).neg_mut();
        }
    }
    if !(r[(1, 1)].abs() > 1e-12 * r[(0, 0)].abs().max(1e-300)) {
        return Err(Error::DegeneratePanel("principal component and stock changes are collinear".into()));
    }

    let masked: Vec<f64> = (0..n).filter(|&t| pc[t] * p.stock[t] < 0.0).map(|t| pc[t]).collect();
    let gamma = if masked.len() < 2 { 0.0 } else { crate::stats::variance(&masked) / crate::stats::variance(&pc) };
    let alpha = libm::sqrt(gamma);
    let (c, s) = (libm::cos(alpha), libm::sin(alpha));
    let rotation = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
    let rotated = &q * &rotation;
    // pc = Q R e1 = (Q P)(P' R e1).
    let weights = rotation.transpose() * r.column(0);
    let m: Vec<f64> = (0..n).map(|t| weights[0] * rotated[(t, 0)]).collect();
    let cbi: Vec<f64> = (0..n).map(|t| pc[t] - m[t]).collect();
    Ok(InstrumentPair { dates: p.dates, m, cbi, principal_component: pc, gamma, alpha })
}

/// Three-month OIS change where it moves opposite to stocks, zero otherwise
/// (a zero in either series counts as agreement).
pub fn poor_mans_proxy(panel: &AnnouncementPanel) -> Result<(Vec<Day>, Vec<f64>)> {
    let p = panel.retained()?;
    let values = (0..p.dates.len())
        .map(|t| {
            let rate = p.ois[(t, OIS_3M)];
            if rate * p.stock[t] < 0.0 {
                rate
            } else {
                0.0
            }
        })
        .collect();
    Ok((p.dates, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstrumentMethod {
    Rotational,
    PoorMans,
    Ois3m,
    PcRaw,
}

/// Event-level instrument (and information surprise where the method has
/// one).
pub fn build_instrument(panel: &AnnouncementPanel, method: InstrumentMethod) -> Result<(Vec<Day>, Vec<f64>, Option<Vec<f64>>)> {
    match method {
        InstrumentMethod::Rotational => {
            let pair = build_rotational_instrument(panel)?;
            Ok((pair.dates, pair.m, Some(pair.cbi)))
        }
        InstrumentMethod::PoorMans => {
            let (dates, m) = poor_mans_proxy(panel)?;
            Ok((dates, m, None))
        }
        InstrumentMethod::Ois3m => {
            let p = panel.retained()?;
            Ok((p.dates, p.ois.column(OIS_3M).iter().copied().collect(), None))
        }
        InstrumentMethod::PcRaw => {
            let p = panel.retained()?;
            let pc = ois_principal_component(&p.ois)?;
            Ok((p.dates, pc, None))
        }
    }
}

/// Sum of event values within each month of `calendar`; months without
/// events are zero and events outside the calendar are ignored.
pub fn events_to_monthly(dates: &[Day], values: &[f64], calendar: &[Month]) -> Vec<f64> {
    calendar
        .iter()
        .map(|m| dates.iter().zip(values).filter(|(d, _)| d.month() == *m).map(|(_, v)| v).sum())
        .collect()
}

/// Share of instrument variance due to the targeted shock,
/// `phi01^2 / (phi01^2 + phi02^2)`.
pub fn reliability_indicator(phi01: f64, phi02: f64) -> Result<f64> {
    let (a, b) = (phi01 * phi01, phi02 * phi02);
    if a + b == 0.0 {
        return Err(Error::BothZero);
    }
    Ok(a / (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reliability_spot_values() {
        assert_eq!(reliability_indicator(1.0, 0.0), Ok(1.0));
        assert_eq!(reliability_indicator(1.0, 1.0), Ok(0.5));
        assert!((reliability_indicator(3.0, 4.0).unwrap() - 0.36).abs() < 1e-15);
        assert_eq!(reliability_indicator(0.0, 0.0), Err(Error::BothZero));
    }

    #[test]
    fn monthly_sums() {
        let d = |s| Day::parse(s).unwrap();
        let dates = [d("2010-03-04"), d("2010-03-18"), d("2010-05-06")];
        let cal: Vec<Month> = (0..3).map(|k| Month::parse("2010-03").unwrap().offset(k)).collect();
        let out = events_to_monthly(&dates, &[0.02, -0.01, 0.5], &cal);
        assert!((out[0] - 0.01).abs() < 1e-15);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.5);
    }
}
