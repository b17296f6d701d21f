//! Raw-series transformations that produce the estimation panel.

mod chow_lin;
mod outliers;

pub use chow_lin::{chow_lin_interpolate, Aggregation, ChowLinFit, ChowLinOptions};
pub use outliers::{adjust_additive_outliers, OutlierEntry, OutlierReport, DEFAULT_CRITICAL_VALUE};

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calendar::{Day, Month};
use crate::error::{Error, Result};
use crate::model::ChannelScale;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Daily,
    Monthly,
    Quarterly,
}

/// A named univariate series. Monthly observations are dated on the first
/// of the month, quarterly ones on the first day of the quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub name: String,
    pub frequency: Frequency,
    pub dates: Vec<Day>,
    pub values: Vec<f64>,
}

impl RawSeries {
    pub fn monthly(name: impl Into<String>, start: Month, values: Vec<f64>) -> Self {
        let dates = (0..values.len() as i64).map(|k| first_day(start.offset(k))).collect();
        RawSeries { name: name.into(), frequency: Frequency::Monthly, dates, values }
    }

    /// `start` is the first month of the first quarter.
    pub fn quarterly(name: impl Into<String>, start: Month, values: Vec<f64>) -> Self {
        let dates = (0..values.len() as i64).map(|k| first_day(start.offset(3 * k))).collect();
        RawSeries { name: name.into(), frequency: Frequency::Quarterly, dates, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn months(&self) -> Vec<Month> {
        self.dates.iter().map(|d| d.month()).collect()
    }

    /// Dates strictly increasing and spaced as the frequency requires.
    pub fn validate(&self) -> Result<()> {
        if self.dates.len() != self.values.len() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "{}: {} dates for {} values",
                self.name,
                self.dates.len(),
                self.values.len()
            )));
        }
        for w in self.dates.windows(2) {
            let ok = match self.frequency {
                Frequency::Daily => w[0] < w[1],
                Frequency::Monthly => w[1].month().index() - w[0].month().index() == 1,
                Frequency::Quarterly => w[1].month().index() - w[0].month().index() == 3,
            };
            if !ok {
                return Err(Error::InvalidInput(alloc::format!(
                    "{}: dates {} and {} break the {:?} spacing",
                    self.name,
                    w[0],
                    w[1],
                    self.frequency
                )));
            }
        }
        if self.frequency == Frequency::Quarterly {
            if let Some(d) = self.dates.iter().find(|d| (d.month - 1) % 3 != 0) {
                return Err(Error::InvalidInput(alloc::format!("{}: {d} does not start a quarter", self.name)));
            }
        }
        Ok(())
    }

    fn with_values(&self, dates: Vec<Day>, values: Vec<f64>) -> Self {
        RawSeries { name: self.name.clone(), frequency: self.frequency, dates, values }
    }
}

fn first_day(m: Month) -> Day {
    Day { year: m.year, month: m.month, day: 1 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMethod {
    /// `100 (X_t / X_{t-12} - 1)`
    Standard,
    /// `100 (ln X_t - ln X_{t-12})`
    Log,
    /// `100 (X_t - X_{t-12}) / (0.5 (X_t + X_{t-12}))`
    Symmetric,
}

/// Year-on-year growth in percent of a monthly series; the result starts
/// twelve months later.
pub fn annual_growth(series: &RawSeries, method: GrowthMethod) -> Result<RawSeries> {
    series.validate()?;
    let x = &series.values;
    if x.len() <= 12 {
        return Err(Error::SeriesTooShort { needed: 13, got: x.len() });
    }
    for (index, &value) in x.iter().enumerate() {
        let bad = match method {
            GrowthMethod::Standard => index + 12 < x.len() && value == 0.0,
            GrowthMethod::Log | GrowthMethod::Symmetric => !(value > 0.0),
        };
        if bad {
            return Err(Error::NonPositiveLevel { index, value });
        }
    }
    let values = (12..x.len())
        .map(|t| {
            let (now, before) = (x[t], x[t - 12]);
            match method {
                GrowthMethod::Standard => 100.0 * (now / before - 1.0),
                GrowthMethod::Log => 100.0 * (libm::log(now) - libm::log(before)),
                GrowthMethod::Symmetric => 100.0 * (now - before) / (0.5 * (now + before)),
            }
        })
        .collect();
    Ok(series.with_values(series.dates[12..].to_vec(), values))
}

/// Standardize every column to zero mean and unit sample standard deviation.
pub fn standardize_z(block: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<ChannelScale>)> {
    let mut out = block.clone();
    let mut scales = Vec::with_capacity(block.ncols());
    for j in 0..block.ncols() {
        let col: Vec<f64> = block.column(j).iter().copied().collect();
        let mean = crate::stats::mean(&col);
        let sd = crate::stats::std_dev(&col);
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::ZeroVariance(alloc::format!("column {j}")));
        }
        for v in out.column_mut(j).iter_mut() {
            *v = (*v - mean) / sd;
        }
        scales.push(ChannelScale { mean, std_dev: sd });
    }
    Ok((out, scales))
}

/// Inverse of [`standardize_z`].
pub fn destandardize_z(block: &DMatrix<f64>, scales: &[ChannelScale]) -> DMatrix<f64> {
    DMatrix::from_fn(block.nrows(), block.ncols(), |t, j| block[(t, j)] * scales[j].std_dev + scales[j].mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationRule {
    Mean,
    Sum,
    EndOfMonth,
}

/// Group daily observations by calendar month. Every month between the
/// first and the last observation must contain data.
pub fn aggregate_to_monthly(series: &RawSeries, rule: AggregationRule) -> Result<RawSeries> {
    series.validate()?;
    let Some(first) = series.dates.first() else {
        return Ok(RawSeries { name: series.name.clone(), frequency: Frequency::Monthly, dates: Vec::new(), values: Vec::new() });
    };
    let start = first.month();
    let end = series.dates[series.dates.len() - 1].month();
    let months = (end.index() - start.index() + 1) as usize;
    let mut groups: Vec<Vec<f64>> = alloc::vec![Vec::new(); months];
    for (d, v) in series.dates.iter().zip(&series.values) {
        groups[(d.month().index() - start.index()) as usize].push(*v);
    }
    let mut values = Vec::with_capacity(months);
    for (k, g) in groups.iter().enumerate() {
        let Some(last) = g.last() else {
            let m = start.offset(k as i64);
            return Err(Error::EmptyMonth { year: m.year, month: m.month });
        };
        values.push(match rule {
            AggregationRule::Mean => g.iter().sum::<f64>() / g.len() as f64,
            AggregationRule::Sum => g.iter().sum(),
            AggregationRule::EndOfMonth => *last,
        });
    }
    Ok(RawSeries::monthly(series.name.clone(), start, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn month(s: &str) -> Month {
        Month::parse(s).unwrap()
    }

    #[test]
    fn growth_formulas() {
        let mut x = alloc::vec![100.0; 13];
        x[12] = 110.0;
        let s = RawSeries::monthly("x", month("2000-01"), x);
        let g = |m| annual_growth(&s, m).unwrap().values[0];
        assert!((g(GrowthMethod::Standard) - 10.0).abs() < 1e-12);
        assert!((g(GrowthMethod::Log) - 9.531_017_980_432_49).abs() < 1e-10);
        assert!((g(GrowthMethod::Symmetric) - 1000.0 / 105.0).abs() < 1e-12);
        assert_eq!(annual_growth(&s, GrowthMethod::Log).unwrap().dates[0].month(), month("2001-01"));
    }

    #[test]
    fn growth_rejects_non_positive_levels() {
        let mut x = alloc::vec![100.0; 14];
        x[3] = -1.0;
        let s = RawSeries::monthly("x", month("2000-01"), x);
        assert_eq!(annual_growth(&s, GrowthMethod::Log), Err(Error::NonPositiveLevel { index: 3, value: -1.0 }));
        assert!(annual_growth(&s, GrowthMethod::Standard).is_ok());
    }

    #[test]
    fn standardize_small_case() {
        let m = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        let (z, s) = standardize_z(&m).unwrap();
        assert_eq!(z.as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(s[0], ChannelScale { mean: 2.0, std_dev: 1.0 });
        let (again, _) = standardize_z(&z).unwrap();
        assert!((again - &z).amax() < 1e-12);
        assert!((destandardize_z(&z, &s) - m).amax() < 1e-12);
        assert!(matches!(standardize_z(&DMatrix::from_element(4, 1, 2.0)), Err(Error::ZeroVariance(_))));
    }

    fn daily(days: &[&str], values: &[f64]) -> RawSeries {
        RawSeries {
            name: "d".into(),
            frequency: Frequency::Daily,
            dates: days.iter().map(|d| Day::parse(d).unwrap()).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn daily_aggregation_rules() {
        let s = daily(&["2020-01-02", "2020-01-20", "2020-02-03"], &[1.0, 3.0, 5.0]);
        assert_eq!(aggregate_to_monthly(&s, AggregationRule::Mean).unwrap().values, alloc::vec![2.0, 5.0]);
        assert_eq!(aggregate_to_monthly(&s, AggregationRule::Sum).unwrap().values, alloc::vec![4.0, 5.0]);
        assert_eq!(aggregate_to_monthly(&s, AggregationRule::EndOfMonth).unwrap().values, alloc::vec![3.0, 5.0]);
        let gap = daily(&["2020-01-02", "2020-03-03"], &[1.0, 2.0]);
        assert_eq!(aggregate_to_monthly(&gap, AggregationRule::Mean), Err(Error::EmptyMonth { year: 2020, month: 2 }));
    }
}
