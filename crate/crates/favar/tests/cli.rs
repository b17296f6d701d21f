use std::path::Path;
use std::process::{Command, Output};

use favar::config::{RunConfig, OUTPUT_DIR_ENV};
use favar::dataset::{build_model, build_spec, load_dataset};
use favar::storage::read_draws;
use favar_core::calendar::Month;
use favar_core::gibbs::{run_chain, PosteriorDraws};
use favar_core::pipeline::{annual_growth, GrowthMethod, RawSeries};

const BASE_CONFIG: &str = "seed = 11\noutput_dir = \".\"\n[model]\nvar_lags = 2\n[mcmc]\ntotal_iterations = 600\nburn_in = 100\nthinning = 5\n[simulate]\ncountries = 2\nperiods = 120\n";

fn favar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_favar"))
        .current_dir(dir)
        .env_remove(OUTPUT_DIR_ENV)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn simulated_run(extra: &str) -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("run.toml"), format!("{BASE_CONFIG}{extra}")).unwrap();
    ok(&favar(tmp.path(), &["--config", "run.toml", "simulate"]));
    tmp
}

#[test]
fn estimate_keeps_every_fifth_draw_after_burn_in() {
    let tmp = simulated_run("");
    let dir = tmp.path();
    ok(&favar(dir, &["--config", "run.toml", "--output-dir", "out", "estimate"]));
    let (manifest, draws) = read_draws(&dir.join("out/chain_0")).unwrap();
    assert_eq!(manifest.retained, 100);
    assert_eq!(draws.draws.len(), 100);
    let sweeps: Vec<usize> = draws.draws.iter().map(|d| d.sweep).collect();
    assert_eq!(sweeps, (1..=100).map(|k| 100 + 5 * k).collect::<Vec<_>>());

    // Stored draws read back to exactly the states of an in-memory run.
    let config = RunConfig::load(&dir.join("run.toml")).unwrap();
    let loaded = load_dataset(&config.data).unwrap();
    let spec = build_spec(&config.model, config.mcmc, &loaded).unwrap();
    let model = build_model(spec, &loaded, &config.priors).unwrap();
    let mut memory = PosteriorDraws::new(config.seed);
    run_chain(&model, config.seed, &mut memory, &mut |_, _| {}).unwrap();
    assert_eq!(memory.draws, draws.draws);

    ok(&favar(dir, &["--config", "run.toml", "--output-dir", "out", "irf", "--horizon", "12"]));
    assert!(dir.join("out/irf_summary.csv").exists());
}

#[test]
fn edited_draw_file_is_refused() {
    let tmp = simulated_run("");
    let dir = tmp.path();
    // Shorter chain: the integrity check does not depend on its length.
    ok(&favar(dir, &["--config", "run.toml", "--output-dir", "out", "estimate", "--iterations", "150"]));
    let path = dir.join("out/chain_0/shrinkage.csv");
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("999,1,1\n");
    std::fs::write(&path, text).unwrap();
    let out = favar(dir, &["--config", "run.toml", "--output-dir", "out", "irf"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn contradictory_signs_stop_before_sampling() {
    let tmp = simulated_run("");
    let dir = tmp.path();
    let config = std::fs::read_to_string(dir.join("run.toml")).unwrap().replace(
        "var_lags = 2\n",
        "var_lags = 2\nsign_restrictions = [{ variable = \"spread\", sign = \"positive\" }, { variable = \"spread\", sign = \"negative\" }]\n",
    );
    std::fs::write(dir.join("bad.toml"), config).unwrap();
    let out = favar(dir, &["--config", "bad.toml", "--output-dir", "out", "estimate"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.join("out/chain_0").exists());
}

#[test]
fn bad_settings_and_missing_files_have_their_own_codes() {
    let tmp = simulated_run("");
    let dir = tmp.path();
    let out = favar(dir, &["--config", "run.toml", "--output-dir", "out", "estimate", "--burn-in", "600"]);
    assert_eq!(out.status.code(), Some(2));
    let out = favar(dir, &["--config", "missing.toml", "estimate"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn explosive_truth_is_a_numerical_failure() {
    let tmp = simulated_run("");
    let dir = tmp.path();
    let truth: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("truth.json")).unwrap()).unwrap();
    let mut parameters = truth["parameters"].clone();
    // Column-major storage: entry 1 is the first factor's own first lag.
    parameters["var"]["coefficients"]["data"][1] = serde_json::json!(1.2);
    std::fs::write(dir.join("explosive.json"), parameters.to_string()).unwrap();
    let out = favar(dir, &["--config", "run.toml", "--output-dir", "bad", "simulate", "--truth", "explosive.json"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn output_directory_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    std::fs::write(dir.join("run.toml"), BASE_CONFIG.replace("output_dir = \".\"", "output_dir = \"from_config\"")).unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_favar"))
            .current_dir(dir)
            .env(OUTPUT_DIR_ENV, dir.join("from_env"))
            .args(args)
            .output()
            .unwrap();
        ok(&out);
    };
    run(&["--config", "run.toml", "simulate"]);
    assert!(dir.join("from_env/x_out.csv").exists());
    assert!(!dir.join("from_config").exists());
    run(&["--config", "run.toml", "--output-dir", "from_flag", "simulate"]);
    assert!(dir.join("from_flag/x_out.csv").exists());
    ok(&favar(dir, &["--config", "run.toml", "simulate"]));
    assert!(dir.join("from_config/x_out.csv").exists());
}

fn month_table(path: &Path, names: &[&str], start: Month, columns: &[Vec<f64>]) {
    let mut text = format!("date,{}\n", names.join(","));
    for t in 0..columns[0].len() {
        let row: Vec<String> = columns.iter().map(|c| c[t].to_string()).collect();
        text.push_str(&format!("{},{}\n", start.offset(t as i64), row.join(",")));
    }
    std::fs::write(path, text).unwrap();
}

fn read_column(path: &Path, column: usize) -> Vec<(String, f64)> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[0].to_string(), cells[column].parse().unwrap())
        })
        .collect()
}

#[test]
fn prepare_data_turns_levels_into_growth_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let start = Month::new(2010, 1).unwrap();
    let level = |base: f64, rate: f64, wobble: f64| -> Vec<f64> {
        (0..60).map(|t| base * (1.0 + rate).powi(t) * (1.0 + wobble * (t as f64 * 0.9).sin())).collect()
    };
    let names = ["EA19", "DE", "FR"];
    let output = vec![level(100.0, 0.002, 0.01), level(90.0, 0.003, 0.015), level(110.0, 0.001, 0.012)];
    let prices = vec![level(95.0, 0.0015, 0.002), level(97.0, 0.002, 0.003), level(99.0, 0.001, 0.004)];
    month_table(&dir.join("ip.csv"), &names, start, &output);
    month_table(&dir.join("hicp.csv"), &names, start, &prices);
    let rate: Vec<f64> = (0..70).map(|t| 1.0 + 0.5 * (t as f64 * 0.2).cos()).collect();
    month_table(&dir.join("channels.csv"), &["policy_rate"], start.offset(-5), std::slice::from_ref(&rate));
    std::fs::write(
        dir.join("run.toml"),
        "output_dir = \"prepared\"\n[prepare]\noutput_levels = \"ip.csv\"\ninflation_levels = \"hicp.csv\"\nchannels_monthly = \"channels.csv\"\n",
    )
    .unwrap();
    ok(&favar(dir, &["--config", "run.toml", "prepare-data", "--outlier-critical", "1e9"]));

    let x_out = read_column(&dir.join("prepared/x_out.csv"), 2);
    assert_eq!(x_out.len(), 48);
    assert_eq!(x_out[0].0, "2011-01");
    let expected = annual_growth(&RawSeries::monthly("DE", start, output[1].clone()), GrowthMethod::Standard).unwrap();
    for (k, (_, v)) in x_out.iter().enumerate() {
        assert!((v - expected.values[k]).abs() < 1e-12);
    }
    let z = read_column(&dir.join("prepared/z.csv"), 1);
    assert_eq!(z.len(), 48);
    assert_eq!(z[0].1, rate[17]);
    assert!(dir.join("prepared/outlier_report.csv").exists());
}

#[test]
fn build_instrument_writes_events_and_monthly_sums() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut text = String::from("date,ois_1m,ois_3m,ois_6m,ois_1y,stoxx\n");
    let days = ["05", "12", "19", "26"];
    for k in 0..24 {
        let x = (k as f64 * 1.3).sin();
        let y = (k as f64 * 0.7).cos();
        let date = format!("2015-{:02}-{}", k / 4 + 1, days[k % 4]);
        text.push_str(&format!("{date},{},{},{},{},{}\n", 0.02 * x, 0.025 * x + 0.004 * y, 0.03 * x + 0.01 * y, 0.03 * x + 0.02 * y, -x + 2.0 * y));
    }
    std::fs::write(dir.join("announcements.csv"), text).unwrap();
    ok(&favar(dir, &["--output-dir", "inst", "build-instrument", "--exclude-dates", "2015-02-12,2015-03-19"]));

    let events = read_column(&dir.join("inst/instrument_events.csv"), 1);
    let cbi = read_column(&dir.join("inst/instrument_events.csv"), 2);
    assert_eq!(events.len(), 22);
    assert!(events.iter().all(|(d, _)| d != "2015-02-12" && d != "2015-03-19"));
    let monthly = read_column(&dir.join("inst/m.csv"), 1);
    assert_eq!(monthly.len(), 6);
    for (month, value) in &monthly {
        let sum: f64 = events.iter().filter(|(d, _)| d.starts_with(month.as_str())).map(|(_, v)| v).sum();
        assert!((value - sum).abs() < 1e-12, "{month}");
    }
    let cbi_monthly = read_column(&dir.join("inst/cbi.csv"), 1);
    assert_eq!(cbi_monthly.len(), 6);
    assert!(cbi.iter().any(|(_, v)| *v != 0.0));
}
