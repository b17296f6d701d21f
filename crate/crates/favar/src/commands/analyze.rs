use std::path::Path;

use favar_core::analysis::{
    coefficient_of_variation, compute_irfs, correlation_table, decompose_country_responses, exposure_fit, peak_of_median,
    summarize_irfs, Band, Benchmark, CountryIrf, CountryResponses, IrfSet, IrfSetup, PeakResponses,
};
use favar_core::model::{Block, McmcState};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::storage::{read_pooled, sha256_hex, Manifest};
use crate::table::{fmt_f64, write_rows, MonthTable};

struct Responses {
    manifest: Manifest,
    states: Vec<McmcState>,
    irf: IrfSet,
    countries: CountryIrf,
}

fn load(config: &RunConfig, draws: &Path) -> CliResult<Responses> {
    let (manifest, states) = read_pooled(draws)?;
    let layout = &manifest.layout;
    let mut setup = IrfSetup::new(&layout.spec, layout.channel_scale.clone());
    setup.horizon = config.irf.horizon;
    setup.shock = config.irf.shock;
    let irf = compute_irfs(states.iter().map(|s| &s.var), &setup)?;
    let loadings: Vec<_> = states.iter().map(|s| s.loadings.clone()).collect();
    let countries = decompose_country_responses(&irf, &loadings)?;
    Ok(Responses { manifest, states, irf, countries })
}

fn band_cells(b: &Band) -> [String; 3] {
    [fmt_f64(b.q16), fmt_f64(b.q50), fmt_f64(b.q84)]
}

/// Band over draws of column `country` of one response part.
fn country_band(part: &[nalgebra::DMatrix<f64>], h: usize, country: usize) -> Band {
    let cell: Vec<f64> = part.iter().map(|m| m[(h, country)]).collect();
    Band::of(&cell)
}

fn parts(r: &CountryResponses) -> [(&'static str, &[nalgebra::DMatrix<f64>]); 3] {
    [("total", &r.total), ("common", &r.common), ("channel", &r.channel)]
}

/// Write response draws, their summaries and plot-ready tables.
pub fn irf(config: &RunConfig, draws: &Path, out: &Path) -> CliResult<String> {
    let Responses { manifest, irf, countries, .. } = load(config, draws)?;
    let layout = &manifest.layout;
    let vars = &irf.setup.variables;
    let horizons = irf.setup.horizon + 1;

    let long = irf.responses.iter().enumerate().flat_map(|(d, m)| {
        (0..vars.len()).flat_map(move |v| (0..horizons).map(move |h| vec![d.to_string(), vars[v].clone(), h.to_string(), fmt_f64(m[(h, v)])]))
    });
    write_rows(&out.join("irf_draws.csv"), &["draw", "variable", "horizon", "value"], long)?;

    let summary = summarize_irfs(&irf);
    let rows = summary.iter().map(|(v, h, b)| {
        let mut row = vec![vars[*v].clone(), h.to_string()];
        row.extend(band_cells(b));
        row
    });
    write_rows(&out.join("irf_summary.csv"), &["variable", "horizon", "q16", "q50", "q84"], rows)?;

    // Panel layout: one column triple per variable, one row per horizon.
    let mut header = vec!["horizon".to_string()];
    for v in vars {
        header.extend(["q16", "q50", "q84"].map(|q| format!("{v}_{q}")));
    }
    let rows = (0..horizons).map(|h| {
        let mut row = vec![h.to_string()];
        for v in 0..vars.len() {
            row.extend(band_cells(&summary[v * horizons + h].2));
        }
        row
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(&out.join("figure_aggregate_responses.csv"), &header_refs, rows)?;

    let mut long_rows = Vec::new();
    for block in Block::BOTH {
        let r = countries.block(block);
        for (part, values) in parts(r) {
            for (i, country) in layout.series_names.iter().enumerate() {
                for h in 0..horizons {
                    let mut row = vec![block.name().to_string(), country.clone(), part.to_string(), h.to_string()];
                    row.extend(band_cells(&country_band(values, h, i)));
                    long_rows.push(row);
                }
            }
        }
        let mut header = vec!["horizon".to_string()];
        for c in &layout.series_names {
            header.extend(["q16", "q50", "q84"].map(|q| format!("{c}_{q}")));
        }
        let rows = (0..horizons).map(|h| {
            let mut row = vec![h.to_string()];
            for i in 0..layout.series_names.len() {
                row.extend(band_cells(&country_band(&r.total, h, i)));
            }
            row
        });
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        write_rows(&out.join(format!("figure_country_{}.csv", block.name())), &header_refs, rows)?;
    }
    write_rows(
        &out.join("country_irf_summary.csv"),
        &["block", "country", "part", "horizon", "q16", "q50", "q84"],
        long_rows,
    )?;
    Ok(format!("responses of {} draws over {} horizons into {}", irf.draws(), horizons, out.display()))
}

/// Per-country paths of one part, one vector per draw.
fn country_paths(part: &[nalgebra::DMatrix<f64>], country: usize) -> Vec<Vec<f64>> {
    part.iter().map(|m| m.column(country).iter().copied().collect()).collect()
}

fn read_checked_table(manifest: &Manifest, index: usize) -> CliResult<MonthTable> {
    let input = &manifest.inputs[index];
    let path = Path::new(&input.path);
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    if sha256_hex(&bytes) != input.sha256 {
        return Err(CliError::format(path, "input changed since estimation"));
    }
    MonthTable::read(path)
}

/// Dispersion, exposure fits, peaks and (with characteristics and active
/// country channels) the correlation table.
pub fn report(config: &RunConfig, draws: &Path, out: &Path) -> CliResult<String> {
    let Responses { manifest, states, irf, countries } = load(config, draws)?;
    let layout = &manifest.layout;
    let names = &layout.series_names;
    let horizons: Vec<usize> = config.report.horizons.iter().copied().filter(|&h| h <= irf.setup.horizon).collect();
    let mut notes = Vec::new();

    let mut cov_rows = Vec::new();
    for block in Block::BOTH {
        for benchmark in [Benchmark::CountryMean, Benchmark::Aggregate] {
            let label = match benchmark {
                Benchmark::CountryMean => "country_mean",
                Benchmark::Aggregate => "aggregate",
            };
            match coefficient_of_variation(&countries.block(block).total, &horizons, benchmark) {
                Ok(rows) => {
                    for (h, b) in rows {
                        let mut row = vec![block.name().to_string(), label.to_string(), h.to_string()];
                        row.extend(band_cells(&b));
                        cov_rows.push(row);
                    }
                }
                Err(e) => notes.push(format!("{} dispersion against {label}: {e}", block.name())),
            }
        }
    }
    write_rows(&out.join("cov.csv"), &["block", "benchmark", "horizon", "q16", "q50", "q84"], cov_rows)?;

    let mut fit_rows = Vec::new();
    for block in Block::BOTH {
        let table = read_checked_table(&manifest, block.index())?;
        let factors: Vec<Vec<f64>> = states.iter().map(|s| s.factor_column(block)).collect();
        for (i, name) in names.iter().enumerate() {
            let series: Vec<f64> = table.values.column(i).iter().copied().collect();
            let loading: Vec<f64> = states.iter().map(|s| s.loadings(block).factor[(i, 0)]).collect();
            let fit = exposure_fit(&series, &loading, &factors)?;
            fit_rows.push(vec![block.name().to_string(), name.clone(), fmt_f64(fit.r_squared)]);
        }
    }
    write_rows(&out.join("exposure_fit.csv"), &["block", "country", "r_squared"], fit_rows)?;

    // Peaks of the output responses.
    let output = &countries.output;
    let mut peaks = PeakResponses { total: Vec::new(), common: Vec::new(), channel: Vec::new() };
    let mut peak_rows = Vec::new();
    for (i, name) in names.iter().enumerate().skip(1) {
        let (h, total) = peak_of_median(&country_paths(&output.total, i))?;
        let (_, common) = peak_of_median(&country_paths(&output.common, i))?;
        let (_, channel) = peak_of_median(&country_paths(&output.channel, i))?;
        peaks.total.push(total);
        peaks.common.push(common);
        peaks.channel.push(channel);
        peak_rows.push(vec![name.clone(), h.to_string(), fmt_f64(total), fmt_f64(common), fmt_f64(channel)]);
    }
    write_rows(&out.join("peaks.csv"), &["country", "peak_horizon", "total", "common", "channel"], peak_rows)?;

    if let Some(path) = &config.report.characteristics {
        if !layout.spec.country_channels {
            notes.push("correlation table skipped: country channels are muted".into());
        } else {
            let characteristics = read_characteristics(path, &names[1..])?;
            let table = correlation_table(&peaks, &characteristics)?;
            let rows = table.iter().flat_map(|r| {
                [("total", r.total), ("common", r.common), ("channel", r.channel), ("semi_partial", r.semi_partial)]
                    .map(|(what, c)| vec![r.characteristic.clone(), what.to_string(), fmt_f64(c.r), fmt_f64(c.p_value), c.stars().to_string()])
            });
            write_rows(&out.join("correlation.csv"), &["characteristic", "peak", "r", "p_value", "stars"], rows)?;
        }
    }
    let mut msg = format!("report on {} draws into {}", irf.draws(), out.display());
    for n in notes {
        msg.push_str("\nnote: ");
        msg.push_str(&n);
    }
    Ok(msg)
}

/// Table with a `country` column followed by numeric characteristics,
/// reordered to `countries`.
fn read_characteristics(path: &Path, countries: &[String]) -> CliResult<Vec<(String, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| crate::table::csv_error(path, e))?;
    let header = reader.headers().map_err(|e| crate::table::csv_error(path, e))?.clone();
    let mut by_country = std::collections::HashMap::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| crate::table::csv_error(path, e))?;
        let values: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|c| c.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::format(path, format!("line {}: non-numeric characteristic", k + 2)))?;
        by_country.insert(record[0].to_string(), values);
    }
    let mut out: Vec<(String, Vec<f64>)> = header.iter().skip(1).map(|h| (h.to_string(), Vec::new())).collect();
    for c in countries {
        let row = by_country.get(c).ok_or_else(|| CliError::format(path, format!("no row for {c}")))?;
        for (j, v) in row.iter().enumerate() {
            out[j].1.push(*v);
        }
    }
    Ok(out)
}
