//! Run configuration: a TOML file with one section per stage. Relative
//! paths are resolved against the directory of the file.

use std::path::{Path, PathBuf};

use favar_core::analysis::{Benchmark, DEFAULT_HORIZON};
use favar_core::instrument::InstrumentMethod;
use favar_core::model::{McmcSettings, Priors, Sign};
use favar_core::pipeline::{AggregationRule, GrowthMethod, DEFAULT_CRITICAL_VALUE};
use serde::de::IntoDeserializer;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable that replaces the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "FAVAR_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Independent chains; chain `c` uses seed `seed + c`.
    pub chains: usize,
    pub data: DataPaths,
    pub model: ModelSection,
    pub mcmc: McmcSettings,
    pub priors: Priors,
    pub simulate: SimulateSection,
    pub prepare: PrepareSection,
    pub instrument: InstrumentSection,
    pub irf: IrfSection,
    pub report: ReportSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            output_dir: PathBuf::from("favar-output"),
            chains: 1,
            data: DataPaths::default(),
            model: ModelSection::default(),
            mcmc: McmcSettings::default(),
            priors: Priors::default(),
            simulate: SimulateSection::default(),
            prepare: PrepareSection::default(),
            instrument: InstrumentSection::default(),
            irf: IrfSection::default(),
            report: ReportSection::default(),
        }
    }
}

/// The four estimation inputs; without `m` the model has no instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub x_out: PathBuf,
    pub x_inf: PathBuf,
    pub z: PathBuf,
    pub m: Option<PathBuf>,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            x_out: "x_out.csv".into(),
            x_inf: "x_inf.csv".into(),
            z: "z.csv".into(),
            m: Some("m.csv".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedRestriction {
    /// `output_factor`, `inflation_factor` or a channel name.
    pub variable: String,
    pub sign: Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub factor_lags: usize,
    pub var_lags: usize,
    pub country_channels: bool,
    /// Channel holding the policy rate; the first channel when unset.
    pub policy_rate: Option<String>,
    /// Instruments used, from the left of `m`; all of them when unset.
    pub instrument_count: Option<usize>,
    /// Policy rate up and inflation factor down when unset.
    pub sign_restrictions: Option<Vec<NamedRestriction>>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            factor_lags: 0,
            var_lags: 6,
            country_channels: false,
            policy_rate: None,
            instrument_count: None,
            sign_restrictions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub countries: usize,
    pub channels: Vec<String>,
    pub instruments: usize,
    /// January 2003 to December 2023.
    pub periods: usize,
    /// JSON file with the true parameters; the built-in example otherwise.
    pub truth: Option<PathBuf>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            countries: 3,
            channels: vec!["policy_rate".into(), "spread".into(), "stocks".into()],
            instruments: 1,
            periods: 252,
            truth: None,
        }
    }
}

/// Raw inputs of `prepare-data`. Level files are month-indexed tables with
/// the euro-area aggregate first; quarterly files are dated by the first
/// month of each quarter and need indicator tables with the same columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSection {
    pub output_levels: Option<PathBuf>,
    pub output_quarterly: Option<PathBuf>,
    pub output_indicators: Vec<PathBuf>,
    pub inflation_levels: Option<PathBuf>,
    pub channels_monthly: Option<PathBuf>,
    pub channels_daily: Option<PathBuf>,
    pub growth_method: GrowthMethod,
    pub outlier_critical: f64,
    pub aggregation_rule: AggregationRule,
}

impl Default for PrepareSection {
    fn default() -> Self {
        PrepareSection {
            output_levels: None,
            output_quarterly: None,
            output_indicators: Vec::new(),
            inflation_levels: None,
            channels_monthly: None,
            channels_daily: None,
            growth_method: GrowthMethod::Standard,
            outlier_critical: DEFAULT_CRITICAL_VALUE,
            aggregation_rule: AggregationRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstrumentSection {
    pub announcements: PathBuf,
    pub method: InstrumentMethod,
    pub exclude_dates: Vec<String>,
    /// Month-indexed table whose dates define the monthly calendar; the
    /// span of the announcements otherwise.
    pub calendar: Option<PathBuf>,
}

impl Default for InstrumentSection {
    fn default() -> Self {
        InstrumentSection {
            announcements: "announcements.csv".into(),
            method: InstrumentMethod::Rotational,
            exclude_dates: vec!["2008-10-08".into()],
            calendar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfSection {
    pub horizon: usize,
    pub shock: usize,
}

impl Default for IrfSection {
    fn default() -> Self {
        IrfSection { horizon: DEFAULT_HORIZON, shock: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub benchmark: Benchmark,
    pub horizons: Vec<usize>,
    /// Month-free table: first column country name, then one column per
    /// characteristic.
    pub characteristics: Option<PathBuf>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { benchmark: Benchmark::CountryMean, horizons: vec![0, 12, 24, 36], characteristics: None }
    }
}

impl RunConfig {
    /// Parse a file; unknown keys and type errors are reported with their
    /// line and column.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.output_dir);
        join(&mut self.data.x_out);
        join(&mut self.data.x_inf);
        join(&mut self.data.z);
        self.data.m.as_mut().map(join);
        self.simulate.truth.as_mut().map(join);
        let p = &mut self.prepare;
        for slot in [&mut p.output_levels, &mut p.output_quarterly, &mut p.inflation_levels, &mut p.channels_monthly, &mut p.channels_daily] {
            slot.as_mut().map(join);
        }
        p.output_indicators.iter_mut().for_each(join);
        join(&mut self.instrument.announcements);
        self.instrument.calendar.as_mut().map(join);
        self.report.characteristics.as_mut().map(join);
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

/// Parse a snake/kebab-case option value into one of the configuration enums.
pub fn parse_choice<T: for<'de> Deserialize<'de>>(value: &str) -> Result<T, String> {
    let de: serde::de::value::StrDeserializer<'_, serde::de::value::Error> = value.into_deserializer();
    T::deserialize(de).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("seed = 3\n[mcmc]\ntotal_iterations = 10\nburn_in = 2\nthining = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("thining"), "{msg}");
    }

    #[test]
    fn sections_parse() {
        let text = r#"
            seed = 7
            chains = 2
            [model]
            var_lags = 2
            policy_rate = "rate"
            sign_restrictions = [{ variable = "rate", sign = "positive" }]
            [priors]
            kappa_max = 5.0
            [instrument]
            method = "poor-mans"
            [report]
            benchmark = "aggregate"
        "#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!((c.seed, c.chains, c.model.var_lags), (7, 2, 2));
        assert_eq!(c.priors.kappa_max, 5.0);
        assert_eq!(c.priors.loading_variance, 10.0);
        assert_eq!(c.instrument.method, InstrumentMethod::PoorMans);
        assert_eq!(c.report.benchmark, Benchmark::Aggregate);
    }

    #[test]
    fn choices_from_flags() {
        assert_eq!(parse_choice::<GrowthMethod>("log"), Ok(GrowthMethod::Log));
        assert_eq!(parse_choice::<InstrumentMethod>("pc-raw"), Ok(InstrumentMethod::PcRaw));
        assert!(parse_choice::<AggregationRule>("median").is_err());
    }
}
