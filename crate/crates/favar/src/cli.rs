//! Command-line definition. Flags override the configuration file, which
//! overrides the built-in defaults.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use favar_core::analysis::Benchmark;
use favar_core::instrument::InstrumentMethod;
use favar_core::pipeline::{AggregationRule, GrowthMethod};

use crate::commands;
use crate::config::{parse_choice, RunConfig};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "favar", version, about = "Sign-restricted proxy FAVAR estimation")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the configuration and FAVAR_OUTPUT_DIR).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a synthetic data set and write the truth next to it.
    Simulate {
        #[arg(long)]
        periods: Option<usize>,
        #[arg(long)]
        countries: Option<usize>,
        /// JSON file with true parameters.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Turn raw level and daily files into the estimation tables.
    PrepareData {
        #[arg(long, value_parser = parse_choice::<GrowthMethod>)]
        growth_method: Option<GrowthMethod>,
        #[arg(long)]
        outlier_critical: Option<f64>,
        #[arg(long, value_parser = parse_choice::<AggregationRule>)]
        aggregation_rule: Option<AggregationRule>,
    },
    /// Build the monthly instrument from announcement-day changes.
    BuildInstrument {
        #[arg(long)]
        announcements: Option<PathBuf>,
        #[arg(long, value_parser = parse_choice::<InstrumentMethod>)]
        method: Option<InstrumentMethod>,
        /// Comma-separated YYYY-MM-DD dates to drop (replaces the default).
        #[arg(long, value_delimiter = ',')]
        exclude_dates: Option<Vec<String>>,
        #[arg(long)]
        calendar: Option<PathBuf>,
    },
    /// Run the Gibbs sampler and store the retained draws.
    Estimate {
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thinning: Option<usize>,
    },
    /// Impulse responses from stored draws.
    Irf {
        /// Chain directory, or a directory of chains (the output directory
        /// by default).
        #[arg(long)]
        draws: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        shock: Option<usize>,
    },
    /// Dispersion, exposure and correlation tables from stored draws.
    Report {
        #[arg(long)]
        draws: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_parser = parse_choice::<Benchmark>)]
        benchmark: Option<Benchmark>,
        #[arg(long)]
        characteristics: Option<PathBuf>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Run the command and return the message for the terminal.
pub fn run(cli: Cli) -> CliResult<String> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut config.seed, cli.seed);
    let out = cli.output_dir.clone().unwrap_or_else(|| config.output_dir());
    match cli.command {
        Command::Simulate { periods, countries, truth } => {
            set(&mut config.simulate.periods, periods);
            set(&mut config.simulate.countries, countries);
            config.simulate.truth = truth.or(config.simulate.truth);
            commands::simulate(&config, &out)
        }
        Command::PrepareData { growth_method, outlier_critical, aggregation_rule } => {
            set(&mut config.prepare.growth_method, growth_method);
            set(&mut config.prepare.outlier_critical, outlier_critical);
            set(&mut config.prepare.aggregation_rule, aggregation_rule);
            commands::prepare_data(&config, &out)
        }
        Command::BuildInstrument { announcements, method, exclude_dates, calendar } => {
            set(&mut config.instrument.announcements, announcements);
            set(&mut config.instrument.method, method);
            set(&mut config.instrument.exclude_dates, exclude_dates);
            config.instrument.calendar = calendar.or(config.instrument.calendar);
            commands::build_instrument(&config, &out)
        }
        Command::Estimate { chains, iterations, burn_in, thinning } => {
            set(&mut config.chains, chains);
            set(&mut config.mcmc.total_iterations, iterations);
            set(&mut config.mcmc.burn_in, burn_in);
            set(&mut config.mcmc.thinning, thinning);
            let chains = commands::estimate(&config, &out)?;
            let lines: Vec<String> = chains
                .iter()
                .map(|c| format!("chain seed {}: {} draws in {} (hash {})", c.seed, c.retained, c.dir.display(), c.content_hash))
                .collect();
            Ok(lines.join("\n"))
        }
        Command::Irf { draws, horizon, shock } => {
            set(&mut config.irf.horizon, horizon);
            set(&mut config.irf.shock, shock);
            let draws = draws.unwrap_or_else(|| out.clone());
            commands::irf(&config, &draws, &out)
        }
        Command::Report { draws, horizon, benchmark, characteristics } => {
            set(&mut config.irf.horizon, horizon);
            set(&mut config.report.benchmark, benchmark);
            config.report.characteristics = characteristics.or(config.report.characteristics);
            let draws = draws.unwrap_or_else(|| out.clone());
            commands::report(&config, &draws, &out)
        }
    }
}
