use std::path::{Path, PathBuf};
use std::time::Instant;

use favar_core::gibbs::run_chain;
use favar_core::model::{initialize_state, Model};
use favar_core::svar::ImpactDiagnostics;

use crate::config::RunConfig;
use crate::dataset::{build_model, build_spec, load_dataset, LoadedData};
use crate::error::{CliError, CliResult};
use crate::storage::{content_hash, write_manifest, DrawWriter, FileDigest, Manifest, RunLayout, FORMAT_VERSION};

/// Sweeps between progress lines.
pub const PROGRESS_EVERY: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub dir: PathBuf,
    pub seed: u64,
    pub retained: usize,
    pub content_hash: String,
}

fn input_digests(config: &RunConfig) -> CliResult<Vec<FileDigest>> {
    let d = &config.data;
    let mut paths = vec![&d.x_out, &d.x_inf, &d.z];
    paths.extend(d.m.as_ref());
    paths.into_iter().map(|p| FileDigest::of(p, p.display().to_string())).collect()
}

fn progress_line(chain: usize, sweep: usize, total: usize, diag: &ImpactDiagnostics) -> String {
    let rates: Vec<String> = diag
        .columns
        .iter()
        .map(|c| match c.direction_proposals {
            0 => format!("-/{:.2}", c.scale_rate()),
            _ => format!("{:.2}/{:.2}", c.direction_rate(), c.scale_rate()),
        })
        .collect();
    format!("chain {chain}: sweep {sweep}/{total}, impact acceptance (direction/scale) {}", rates.join(" "))
}

fn run_one(model: &Model, layout: &RunLayout, inputs: &[FileDigest], seed: u64, chain: usize, dir: &Path) -> CliResult<ChainSummary> {
    let started = Instant::now();
    let mut writer = DrawWriter::create(dir, layout)?;
    let total = model.spec.mcmc.total_iterations;
    let mut progress = |s: usize, diag: &ImpactDiagnostics| {
        if s % PROGRESS_EVERY == 0 || s == total {
            eprintln!("{}", progress_line(chain, s, total, diag));
        }
    };
    let report = run_chain(model, seed, &mut writer, &mut progress);
    let report = match (report, writer.failure.take()) {
        (_, Some(io)) => return Err(io),
        (r, None) => r?,
    };
    let draw_files = writer.finish()?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        seed,
        chain,
        layout: layout.clone(),
        inputs: inputs.to_vec(),
        sweeps: report.sweeps,
        retained: report.retained,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        impact_diagnostics: report.impact,
        content_hash: content_hash(&draw_files),
        draw_files,
    };
    write_manifest(dir, &manifest)?;
    Ok(ChainSummary { dir: dir.to_path_buf(), seed, retained: manifest.retained, content_hash: manifest.content_hash })
}

/// Validate the inputs, then run `chains` chains concurrently, chain `c`
/// with seed `seed + c`, each into `out/chain_<c>`.
pub fn estimate(config: &RunConfig, out: &Path) -> CliResult<Vec<ChainSummary>> {
    if config.chains == 0 {
        return Err(CliError::Config("chains must be at least 1".into()));
    }
    let loaded: LoadedData = load_dataset(&config.data)?;
    let spec = build_spec(&config.model, config.mcmc, &loaded)?;
    let model = build_model(spec, &loaded, &config.priors)?;
    let start = initialize_state(&model)?;
    let layout = RunLayout {
        spec: model.spec.clone(),
        priors: model.priors,
        dates: model.data.dates.clone(),
        series_names: model.data.series_names.clone(),
        channel_names: loaded.channel_names.clone(),
        instrument_names: loaded.instrument_names.iter().take(model.spec.instrument_count).cloned().collect(),
        channel_scale: model.data.channel_scale.clone(),
        minnesota_scale: start.minnesota_scale,
        factor_prior_mean: start.factor_prior_mean,
    };
    let inputs = input_digests(config)?;
    let results: Vec<CliResult<ChainSummary>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|c| {
                let (model, layout, inputs) = (&model, &layout, &inputs);
                let dir = out.join(format!("chain_{c}"));
                let seed = config.seed.wrapping_add(c as u64);
                scope.spawn(move || run_one(model, layout, inputs, seed, c, &dir))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    results.into_iter().collect()
}
