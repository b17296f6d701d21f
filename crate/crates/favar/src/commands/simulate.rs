use std::path::Path;

use favar_core::model::{simulate_dgp, ModelSpec, SimulatedData, TrueParameters};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dataset::{default_restrictions, write_dataset, LoadedData};
use crate::error::{CliError, CliResult};
use crate::table::write_file;

/// Parameters and latent paths behind a simulated data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub spec: ModelSpec,
    pub seed: u64,
    pub parameters: TrueParameters,
    #[serde(with = "favar_core::serde_matrix")]
    pub factors: DMatrix<f64>,
    pub log_volatility: Vec<Vec<f64>>,
    #[serde(with = "favar_core::serde_matrix")]
    pub shocks: DMatrix<f64>,
}

pub fn simulation_spec(config: &RunConfig) -> CliResult<ModelSpec> {
    let s = &config.simulate;
    let policy_rate_index = match &config.model.policy_rate {
        Some(name) => s
            .channels
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Config(format!("policy rate '{name}' is not a simulated channel")))?,
        None => 0,
    };
    let mut spec = ModelSpec {
        country_count: s.countries,
        channel_names: s.channels.clone(),
        factor_lags: config.model.factor_lags,
        var_lags: config.model.var_lags,
        country_channels: config.model.country_channels,
        policy_rate_index,
        instrument_count: s.instruments,
        sign_restrictions: Vec::new(),
        mcmc: config.mcmc,
    };
    spec.sign_restrictions = default_restrictions(&spec);
    Ok(spec)
}

/// Simulate a data set, write the four input tables and `truth.json`.
pub fn simulate(config: &RunConfig, out: &Path) -> CliResult<String> {
    let spec = simulation_spec(config)?;
    let parameters = match &config.simulate.truth {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?
        }
        None => TrueParameters::example(&spec),
    };
    let SimulatedData { data, factors, log_volatility, shocks } =
        simulate_dgp(&spec, &parameters, config.simulate.periods, config.seed)?;
    let loaded = LoadedData {
        channel_names: spec.channel_names.clone(),
        instrument_names: (1..=spec.instrument_count).map(|j| format!("m{j}")).collect(),
        data,
    };
    write_dataset(out, &loaded)?;
    let truth = Truth { spec, seed: config.seed, parameters, factors, log_volatility, shocks };
    let path = out.join("truth.json");
    let json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::format(&path, e.to_string()))?;
    write_file(&path, json.as_bytes())?;
    Ok(format!(
        "simulated {} months for {} countries into {}",
        config.simulate.periods,
        config.simulate.countries,
        out.display()
    ))
}
