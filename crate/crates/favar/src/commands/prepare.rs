use std::collections::BTreeMap;
use std::path::Path;

use favar_core::calendar::{Day, Month};
use favar_core::pipeline::{
    adjust_additive_outliers, aggregate_to_monthly, annual_growth, chow_lin_interpolate, ChowLinOptions, Frequency,
    OutlierReport, RawSeries,
};
use favar_core::Error;
use nalgebra::DMatrix;

use crate::config::{PrepareSection, RunConfig};
use crate::dataset::AGGREGATE_NAME;
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_rows, MonthTable, Table};

/// Finite stretch of one column; interior gaps are an error.
fn column_values<K: Copy>(path: &Path, names: &[String], dates: &[K], values: &DMatrix<f64>, j: usize) -> CliResult<(Vec<K>, Vec<f64>)> {
    let finite: Vec<usize> = (0..dates.len()).filter(|&t| values[(t, j)].is_finite()).collect();
    let (Some(&first), Some(&last)) = (finite.first(), finite.last()) else {
        return Err(CliError::format(path, format!("column {} is empty", names[j])));
    };
    if last - first + 1 != finite.len() {
        return Err(CliError::format(path, format!("column {} has interior gaps", names[j])));
    }
    Ok((dates[first..=last].to_vec(), (first..=last).map(|t| values[(t, j)]).collect()))
}

fn monthly_series(path: &Path, table: &MonthTable, j: usize) -> CliResult<RawSeries> {
    let (dates, values) = column_values(path, &table.names, &table.dates, &table.values, j)?;
    let series = RawSeries::monthly(table.names[j].clone(), dates[0], values);
    if series.months() != dates {
        return Err(CliError::format(path, "dates are not consecutive months"));
    }
    Ok(series)
}

/// Monthly levels of the output panel, interpolated from quarterly data
/// when no monthly levels are given.
fn output_levels(p: &PrepareSection) -> CliResult<(Vec<RawSeries>, Vec<String>)> {
    if let Some(path) = &p.output_levels {
        let t = MonthTable::read(path)?;
        let series = (0..t.names.len()).map(|j| monthly_series(path, &t, j)).collect::<CliResult<_>>()?;
        return Ok((series, t.names));
    }
    let Some(path) = &p.output_quarterly else {
        return Err(CliError::Config("prepare needs output_levels or output_quarterly".into()));
    };
    if p.output_indicators.is_empty() {
        return Err(CliError::Config("quarterly output needs at least one indicator table".into()));
    }
    let q = MonthTable::read(path)?;
    let indicators: Vec<(std::path::PathBuf, MonthTable)> = p
        .output_indicators
        .iter()
        .map(|ip| Ok((ip.clone(), MonthTable::read(ip)?)))
        .collect::<CliResult<_>>()?;
    let mut out = Vec::with_capacity(q.names.len());
    for (j, name) in q.names.iter().enumerate() {
        let (dates, values) = column_values(path, &q.names, &q.dates, &q.values, j)?;
        let quarterly = RawSeries::quarterly(name.clone(), dates[0], values);
        if quarterly.months() != dates {
            return Err(CliError::format(path, "dates are not consecutive quarters"));
        }
        let mut monthly = Vec::with_capacity(indicators.len());
        for (ip, table) in &indicators {
            let k = table.names.iter().position(|n| n == name).ok_or_else(|| CliError::format(ip, format!("no column {name}")))?;
            monthly.push(monthly_series(ip, table, k)?);
        }
        out.push(chow_lin_interpolate(&quarterly, &monthly, &ChowLinOptions::default())?.series);
    }
    Ok((out, q.names))
}

fn level_table(path: &Path) -> CliResult<(Vec<RawSeries>, Vec<String>)> {
    let t = MonthTable::read(path)?;
    let series = (0..t.names.len()).map(|j| monthly_series(path, &t, j)).collect::<CliResult<_>>()?;
    Ok((series, t.names))
}

/// Outlier adjustment then annual growth of every series of one panel.
fn growth_panel(levels: Vec<RawSeries>, p: &PrepareSection, reports: &mut Vec<(String, OutlierReport)>, block: &str) -> CliResult<Vec<RawSeries>> {
    levels
        .into_iter()
        .map(|s| {
            let (adjusted, report) = adjust_additive_outliers(&s, p.outlier_critical)?;
            reports.push((block.to_string(), report));
            Ok(annual_growth(&adjusted, p.growth_method)?)
        })
        .collect()
}

fn channel_series(p: &PrepareSection) -> CliResult<(Vec<RawSeries>, Vec<String>)> {
    if let Some(path) = &p.channels_monthly {
        return level_table(path);
    }
    let Some(path) = &p.channels_daily else {
        return Err(CliError::Config("prepare needs channels_monthly or channels_daily".into()));
    };
    let t = Table::<Day>::read(path)?;
    let mut out = Vec::with_capacity(t.names.len());
    for j in 0..t.names.len() {
        let (dates, values): (Vec<Day>, Vec<f64>) =
            (0..t.dates.len()).filter(|&k| t.values[(k, j)].is_finite()).map(|k| (t.dates[k], t.values[(k, j)])).unzip();
        let daily = RawSeries { name: t.names[j].clone(), frequency: Frequency::Daily, dates, values };
        out.push(aggregate_to_monthly(&daily, p.aggregation_rule)?);
    }
    Ok((out, t.names))
}

/// Months in which every series has a value; they must be consecutive.
fn common_months(all: &[&[RawSeries]]) -> CliResult<Vec<Month>> {
    let mut count: BTreeMap<Month, usize> = BTreeMap::new();
    let total: usize = all.iter().map(|b| b.len()).sum();
    for s in all.iter().flat_map(|b| b.iter()) {
        for m in s.months() {
            *count.entry(m).or_default() += 1;
        }
    }
    let months: Vec<Month> = count.into_iter().filter(|(_, c)| *c == total).map(|(m, _)| m).collect();
    if months.is_empty() {
        return Err(Error::CoverageGap("the series share no common months".into()).into());
    }
    if months.windows(2).any(|w| w[1] != w[0].offset(1)) {
        return Err(Error::CoverageGap("the common months are not consecutive".into()).into());
    }
    Ok(months)
}

fn aligned(names: Vec<String>, series: &[RawSeries], months: &[Month]) -> MonthTable {
    let values = DMatrix::from_fn(months.len(), series.len(), |t, j| {
        let s = &series[j];
        let offset = (months[t].index() - s.dates[0].month().index()) as usize;
        s.values[offset]
    });
    MonthTable::new(names, months.to_vec(), values)
}

/// Build `x_out.csv`, `x_inf.csv` and `z.csv` from raw inputs, plus
/// `outlier_report.csv`.
pub fn prepare_data(config: &RunConfig, out: &Path) -> CliResult<String> {
    let p = &config.prepare;
    let mut reports = Vec::new();
    let (out_levels, out_names) = output_levels(p)?;
    let inf_path = p.inflation_levels.as_ref().ok_or_else(|| CliError::Config("prepare needs inflation_levels".into()))?;
    let (inf_levels, inf_names) = level_table(inf_path)?;
    if out_names.first().map(String::as_str) != Some(AGGREGATE_NAME) || inf_names != out_names {
        return Err(CliError::Config(format!("both panels need the same countries with {AGGREGATE_NAME} first")));
    }
    let output = growth_panel(out_levels, p, &mut reports, "output")?;
    let inflation = growth_panel(inf_levels, p, &mut reports, "inflation")?;
    let (channels, z_names) = channel_series(p)?;
    let months = common_months(&[&output, &inflation, &channels])?;

    aligned(out_names.clone(), &output, &months).write(&out.join("x_out.csv"))?;
    aligned(inf_names, &inflation, &months).write(&out.join("x_inf.csv"))?;
    aligned(z_names, &channels, &months).write(&out.join("z.csv"))?;
    let rows = reports.iter().flat_map(|(block, r)| {
        r.entries.iter().map(move |e| {
            vec![
                block.clone(),
                r.series.clone(),
                e.date.to_string(),
                fmt_f64(e.original),
                fmt_f64(e.adjusted),
                fmt_f64(e.statistic),
            ]
        })
    });
    write_rows(&out.join("outlier_report.csv"), &["block", "series", "date", "original", "adjusted", "statistic"], rows)?;
    let flagged: usize = reports.iter().map(|(_, r)| r.entries.len()).sum();
    Ok(format!(
        "prepared {} months ({} to {}), {flagged} outliers adjusted, into {}",
        months.len(),
        months[0],
        months[months.len() - 1],
        out.display()
    ))
}
