//! Estimation inputs on disk and the model built from them.

use std::path::Path;

use favar_core::calendar::Month;
use favar_core::model::{validate_spec, DataSet, Model, ModelSpec, Priors, SignRestriction};
use favar_core::pipeline::{destandardize_z, standardize_z};
use favar_core::Error;
use nalgebra::DMatrix;

use crate::config::{DataPaths, ModelSection, NamedRestriction};
use crate::error::{CliError, CliResult};
use crate::table::MonthTable;

pub const AGGREGATE_NAME: &str = "EA19";

/// A data set together with the column names that are not part of
/// [`DataSet`] itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub data: DataSet,
    pub channel_names: Vec<String>,
    pub instrument_names: Vec<String>,
}

fn check_calendar(path: &Path, table: &MonthTable, dates: &[Month]) -> CliResult<()> {
    if table.dates != dates {
        return Err(CliError::format(path, "dates differ from those of the output panel"));
    }
    Ok(())
}

/// Read the four tables. Channels are standardized; the scaling is kept
/// for reporting.
pub fn load_dataset(paths: &DataPaths) -> CliResult<LoadedData> {
    let out = MonthTable::read(&paths.x_out)?;
    let inf = MonthTable::read(&paths.x_inf)?;
    let z = MonthTable::read(&paths.z)?;
    for (path, table) in [(&paths.x_out, &out), (&paths.x_inf, &inf)] {
        if table.names.first().map(String::as_str) != Some(AGGREGATE_NAME) {
            return Err(CliError::format(path, format!("the first series must be {AGGREGATE_NAME}")));
        }
    }
    if inf.names != out.names {
        return Err(CliError::format(&paths.x_inf, "series names differ from those of the output panel"));
    }
    check_calendar(&paths.x_inf, &inf, &out.dates)?;
    check_calendar(&paths.z, &z, &out.dates)?;
    let (instruments, instrument_names) = match &paths.m {
        Some(path) => {
            let m = MonthTable::read(path)?;
            check_calendar(path, &m, &out.dates)?;
            (m.values, m.names)
        }
        None => (DMatrix::zeros(out.dates.len(), 0), Vec::new()),
    };
    if z.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("channel table has missing values".into()).into());
    }
    let (channels, channel_scale) = standardize_z(&z.values)?;
    Ok(LoadedData {
        data: DataSet {
            dates: out.dates,
            series_names: out.names,
            output: out.values,
            inflation: inf.values,
            channels,
            instruments,
            channel_scale,
        },
        channel_names: z.names,
        instrument_names,
    })
}

/// Write `x_out.csv`, `x_inf.csv`, `z.csv` (original units) and `m.csv`.
pub fn write_dataset(dir: &Path, loaded: &LoadedData) -> CliResult<()> {
    let d = &loaded.data;
    let table = |names: &[String], values: &DMatrix<f64>| MonthTable::new(names.to_vec(), d.dates.clone(), values.clone());
    table(&d.series_names, &d.output).write(&dir.join("x_out.csv"))?;
    table(&d.series_names, &d.inflation).write(&dir.join("x_inf.csv"))?;
    table(&loaded.channel_names, &destandardize_z(&d.channels, &d.channel_scale)).write(&dir.join("z.csv"))?;
    if !loaded.instrument_names.is_empty() {
        table(&loaded.instrument_names, &d.instruments).write(&dir.join("m.csv"))?;
    }
    Ok(())
}

/// Model specification implied by the configuration and the data.
pub fn build_spec(section: &ModelSection, mcmc: favar_core::model::McmcSettings, loaded: &LoadedData) -> CliResult<ModelSpec> {
    let policy_rate_index = match &section.policy_rate {
        Some(name) => loaded
            .channel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| CliError::Config(format!("policy rate '{name}' is not a channel")))?,
        None => 0,
    };
    let available = loaded.instrument_names.len();
    let instrument_count = section.instrument_count.unwrap_or(available);
    if instrument_count > available {
        return Err(Error::DimensionMismatch(format!("{instrument_count} instruments requested, {available} in the data")).into());
    }
    let mut spec = ModelSpec {
        country_count: loaded.data.series_names.len().saturating_sub(1),
        channel_names: loaded.channel_names.clone(),
        factor_lags: section.factor_lags,
        var_lags: section.var_lags,
        country_channels: section.country_channels,
        policy_rate_index,
        instrument_count,
        sign_restrictions: Vec::new(),
        mcmc,
    };
    spec.sign_restrictions = match &section.sign_restrictions {
        Some(list) => resolve_restrictions(&spec, list)?,
        None => default_restrictions(&spec),
    };
    Ok(spec)
}

/// Policy rate up and inflation factor down on impact.
pub fn default_restrictions(spec: &ModelSpec) -> Vec<SignRestriction> {
    use favar_core::model::Sign;
    vec![
        SignRestriction { variable: spec.policy_rate_variable(), sign: Sign::Positive },
        SignRestriction { variable: 1, sign: Sign::Negative },
    ]
}

fn resolve_restrictions(spec: &ModelSpec, list: &[NamedRestriction]) -> CliResult<Vec<SignRestriction>> {
    let names = spec.endogenous_names();
    list.iter()
        .map(|r| {
            let variable = names
                .iter()
                .position(|n| *n == r.variable)
                .ok_or_else(|| Error::InvalidRestriction(format!("unknown variable '{}'", r.variable)))?;
            Ok(SignRestriction { variable, sign: r.sign })
        })
        .collect()
}

/// Validated model with only the first `instrument_count` instruments.
pub fn build_model(spec: ModelSpec, loaded: &LoadedData, priors: &Priors) -> CliResult<Model> {
    let mut data = loaded.data.clone();
    data.instruments = data.instruments.columns(0, spec.instrument_count).into_owned();
    Ok(validate_spec(&spec, &data, priors)?)
}
