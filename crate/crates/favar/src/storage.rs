//! Posterior draws on disk: one CSV per parameter block with one row per
//! retained draw, plus a JSON manifest that records everything needed to
//! rerun the chain.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use favar_core::calendar::Month;
use favar_core::gibbs::{Draw, DrawSink, PosteriorDraws};
use favar_core::model::{Block, ChannelScale, FactorLoadings, LogVolatility, McmcState, ModelSpec, Priors, VarParameters};
use favar_core::svar::ImpactDiagnostics;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_file};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path, label: String) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Ok(FileDigest { path: label, sha256: sha256_hex(&bytes) })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Names and fixed quantities of a run, shared by every draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLayout {
    pub spec: ModelSpec,
    pub priors: Priors,
    pub dates: Vec<Month>,
    pub series_names: Vec<String>,
    pub channel_names: Vec<String>,
    pub instrument_names: Vec<String>,
    pub channel_scale: Vec<ChannelScale>,
    pub minnesota_scale: Vec<f64>,
    #[serde(with = "favar_core::serde_matrix")]
    pub factor_prior_mean: DMatrix<f64>,
}

impl RunLayout {
    fn system_names(&self) -> Vec<String> {
        let mut v = self.spec.endogenous_names();
        v.extend(self.instrument_names.iter().take(self.spec.instrument_count).cloned());
        v
    }

    /// Shapes of a state without values, filled in when reading draws.
    fn empty_state(&self) -> McmcState {
        let d = self.spec.dims();
        let t = self.dates.len();
        McmcState {
            loadings: [FactorLoadings::normalized(&d), FactorLoadings::normalized(&d)],
            volatility: vec![LogVolatility::constant(0.0, t); d.series()],
            factors: DMatrix::zeros(t, 2),
            var: VarParameters {
                coefficients: DMatrix::zeros(d.var_regressors(), d.system),
                impact: DMatrix::zeros(d.system, d.system),
                kappa: [1.0, 1.0],
            },
            minnesota_scale: self.minnesota_scale.clone(),
            factor_prior_mean: self.factor_prior_mean.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub chain: usize,
    pub layout: RunLayout,
    /// Estimation inputs with their content hashes.
    pub inputs: Vec<FileDigest>,
    pub sweeps: usize,
    pub retained: usize,
    pub wall_time_seconds: f64,
    pub impact_diagnostics: ImpactDiagnostics,
    pub draw_files: Vec<FileDigest>,
    /// Hash over the names and hashes of all draw files.
    pub content_hash: String,
}

/// One parameter block stored in its own file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Loadings(Block),
    Factor(Block),
    Volatility(Block),
    Coefficients,
    Impact,
    Shrinkage,
}

const PARTS: [Part; 9] = [
    Part::Loadings(Block::Output),
    Part::Loadings(Block::Inflation),
    Part::Factor(Block::Output),
    Part::Factor(Block::Inflation),
    Part::Volatility(Block::Output),
    Part::Volatility(Block::Inflation),
    Part::Coefficients,
    Part::Impact,
    Part::Shrinkage,
];

impl Part {
    fn file_name(self) -> String {
        match self {
            Part::Loadings(b) => format!("loadings_{}.csv", b.name()),
            Part::Factor(b) => format!("factor_{}.csv", b.name()),
            Part::Volatility(b) => format!("volatility_{}.csv", b.name()),
            Part::Coefficients => "var_coefficients.csv".into(),
            Part::Impact => "impact.csv".into(),
            Part::Shrinkage => "shrinkage.csv".into(),
        }
    }

    fn header(self, layout: &RunLayout) -> Vec<String> {
        let d = layout.spec.dims();
        let dates: Vec<String> = layout.dates.iter().map(Month::to_string).collect();
        let mut h = vec!["sweep".to_string()];
        match self {
            Part::Loadings(_) => {
                for s in &layout.series_names {
                    for p in 0..=d.factor_lags {
                        h.push(format!("{s}:factor:lag{p}"));
                    }
                }
                for s in &layout.series_names {
                    for p in 0..=d.factor_lags {
                        for z in &layout.channel_names {
                            h.push(format!("{s}:{z}:lag{p}"));
                        }
                    }
                }
            }
            Part::Factor(_) => h.extend(dates),
            Part::Volatility(_) => {
                for s in &layout.series_names {
                    for field in ["initial", "global", "global_aux"] {
                        h.push(format!("{s}:{field}"));
                    }
                    for field in ["h", "local", "local_aux"] {
                        h.extend(dates.iter().map(|t| format!("{s}:{field}:{t}")));
                    }
                }
            }
            Part::Coefficients => {
                let names = layout.system_names();
                for eq in &names {
                    h.push(format!("{eq}:const"));
                    for l in 1..=d.var_lags {
                        h.extend(names.iter().map(|v| format!("{eq}:{v}:lag{l}")));
                    }
                }
            }
            Part::Impact => {
                let names = layout.system_names();
                for j in 0..names.len() {
                    h.extend(names.iter().map(|v| format!("{v}:shock{j}")));
                }
            }
            Part::Shrinkage => h.extend(["kappa_own".to_string(), "kappa_cross".to_string()]),
        }
        h
    }

    fn flatten(self, state: &McmcState, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Part::Loadings(b) => {
                let l = state.loadings(b);
                // Row-major: series by series.
                out.extend(l.factor.transpose().iter());
                out.extend(l.channel.transpose().iter());
            }
            Part::Factor(b) => out.extend(state.factors.column(b.index()).iter()),
            Part::Volatility(b) => {
                let n = state.volatility.len() / 2;
                for sv in &state.volatility[b.index() * n..(b.index() + 1) * n] {
                    out.extend([sv.initial, sv.global, sv.global_aux]);
                    out.extend(&sv.path);
                    out.extend(&sv.local);
                    out.extend(&sv.local_aux);
                }
            }
            Part::Coefficients => out.extend(state.var.coefficients.iter()),
            Part::Impact => out.extend(state.var.impact.iter()),
            Part::Shrinkage => out.extend(state.var.kappa),
        }
    }

    fn restore(self, values: &[f64], state: &mut McmcState) {
        match self {
            Part::Loadings(b) => {
                let l = &mut state.loadings[b.index()];
                let split = l.factor.len();
                l.factor = DMatrix::from_row_slice(l.factor.nrows(), l.factor.ncols(), &values[..split]);
                l.channel = DMatrix::from_row_slice(l.channel.nrows(), l.channel.ncols(), &values[split..]);
            }
            Part::Factor(b) => state.factors.column_mut(b.index()).copy_from_slice(values),
            Part::Volatility(b) => {
                let n = state.volatility.len() / 2;
                let t = state.factors.nrows();
                for (k, sv) in state.volatility[b.index() * n..(b.index() + 1) * n].iter_mut().enumerate() {
                    let v = &values[k * (3 + 3 * t)..(k + 1) * (3 + 3 * t)];
                    (sv.initial, sv.global, sv.global_aux) = (v[0], v[1], v[2]);
                    sv.path = v[3..3 + t].to_vec();
                    sv.local = v[3 + t..3 + 2 * t].to_vec();
                    sv.local_aux = v[3 + 2 * t..].to_vec();
                }
            }
            Part::Coefficients => state.var.coefficients.copy_from_slice(values),
            Part::Impact => state.var.impact.copy_from_slice(values),
            Part::Shrinkage => state.var.kappa = [values[0], values[1]],
        }
    }
}

/// Streams retained draws into a chain directory.
pub struct DrawWriter {
    dir: PathBuf,
    files: Vec<(Part, BufWriter<File>)>,
    buffer: Vec<f64>,
    line: String,
    /// First write failure; the chain is stopped and this is reported.
    pub failure: Option<CliError>,
}

impl DrawWriter {
    pub fn create(dir: &Path, layout: &RunLayout) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut files = Vec::with_capacity(PARTS.len());
        for part in PARTS {
            let path = dir.join(part.file_name());
            let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut w = BufWriter::new(file);
            writeln!(w, "{}", part.header(layout).join(",")).map_err(|e| CliError::io(&path, e))?;
            files.push((part, w));
        }
        Ok(DrawWriter { dir: dir.to_path_buf(), files, buffer: Vec::new(), line: String::new(), failure: None })
    }

    /// Flush all files and return their digests.
    pub fn finish(self) -> CliResult<Vec<FileDigest>> {
        if let Some(e) = self.failure {
            return Err(e);
        }
        let mut digests = Vec::with_capacity(self.files.len());
        for (part, mut w) in self.files {
            let path = self.dir.join(part.file_name());
            w.flush().map_err(|e| CliError::io(&path, e))?;
            drop(w);
            digests.push(FileDigest::of(&path, part.file_name())?);
        }
        Ok(digests)
    }
}

impl DrawSink for DrawWriter {
    fn accept(&mut self, sweep: usize, state: &McmcState) -> favar_core::Result<()> {
        for (part, w) in &mut self.files {
            part.flatten(state, &mut self.buffer);
            self.line.clear();
            self.line.push_str(&sweep.to_string());
            for v in &self.buffer {
                self.line.push(',');
                self.line.push_str(&fmt_f64(*v));
            }
            self.line.push('\n');
            if let Err(e) = w.write_all(self.line.as_bytes()) {
                self.failure = Some(CliError::io(&self.dir.join(part.file_name()), e));
                return Err(favar_core::Error::InvalidInput("writing draws failed".into()));
            }
        }
        Ok(())
    }
}

/// Hash over the draw-file digests in storage order.
pub fn content_hash(files: &[FileDigest]) -> String {
    let mut text = String::new();
    for f in files {
        text.push_str(&f.path);
        text.push(' ');
        text.push_str(&f.sha256);
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> CliResult<()> {
    let path = dir.join(MANIFEST_NAME);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| CliError::format(&path, e.to_string()))?;
    write_file(&path, json.as_bytes())
}

pub fn read_manifest(dir: &Path) -> CliResult<Manifest> {
    let path = dir.join(MANIFEST_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(&path, e.to_string()))
}

/// Read one chain directory, checking every file against its recorded hash.
pub fn read_draws(dir: &Path) -> CliResult<(Manifest, PosteriorDraws)> {
    let manifest = read_manifest(dir)?;
    let layout = &manifest.layout;
    let mut rows: Vec<Vec<(usize, Vec<f64>)>> = Vec::with_capacity(PARTS.len());
    for part in PARTS {
        let name = part.file_name();
        let path = dir.join(&name);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        match manifest.draw_files.iter().find(|f| f.path == name) {
            Some(f) if f.sha256 == sha256_hex(&bytes) => {}
            _ => return Err(CliError::format(&path, "content does not match the manifest")),
        }
        let text = String::from_utf8(bytes).map_err(|_| CliError::format(&path, "not UTF-8"))?;
        let mut lines = text.lines();
        let header = part.header(layout);
        if lines.next().map(|h| h.split(',').count()) != Some(header.len()) {
            return Err(CliError::format(&path, "header does not match the manifest layout"));
        }
        let mut parsed = Vec::new();
        for (k, line) in lines.enumerate() {
            let bad = || CliError::format(&path, format!("line {}: malformed row", k + 2));
            let mut cells = line.split(',');
            let sweep: usize = cells.next().and_then(|c| c.parse().ok()).ok_or_else(bad)?;
            let values: Vec<f64> = cells.map(|c| c.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
            if values.len() + 1 != header.len() {
                return Err(bad());
            }
            parsed.push((sweep, values));
        }
        rows.push(parsed);
    }
    let count = rows[0].len();
    let mut draws = PosteriorDraws::new(manifest.seed);
    for k in 0..count {
        let sweep = rows[0][k].0;
        let mut state = layout.empty_state();
        for (part, file_rows) in PARTS.iter().zip(&rows) {
            match file_rows.get(k) {
                Some((s, values)) if *s == sweep => part.restore(values, &mut state),
                _ => return Err(CliError::format(&dir.join(part.file_name()), format!("draw {k} missing or out of step"))),
            }
        }
        draws.draws.push(Draw { sweep, state });
    }
    Ok((manifest, draws))
}

/// Chain directories under `dir`, or `dir` itself when it holds a manifest.
pub fn chain_dirs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if dir.join(MANIFEST_NAME).exists() {
        return Ok(vec![dir.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.join(MANIFEST_NAME).exists() {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(CliError::format(dir, "no chain manifests found"));
    }
    Ok(out)
}

/// Draws of every chain under `dir`, pooled in chain order.
pub fn read_pooled(dir: &Path) -> CliResult<(Manifest, Vec<McmcState>)> {
    let mut first = None;
    let mut states = Vec::new();
    for chain in chain_dirs(dir)? {
        let (manifest, draws) = read_draws(&chain)?;
        if let Some(m) = &first {
            let m: &Manifest = m;
            if m.layout != manifest.layout {
                return Err(CliError::format(&chain, "chains were run with different settings"));
            }
        }
        first.get_or_insert(manifest);
        states.extend(draws.draws.into_iter().map(|d| d.state));
    }
    Ok((first.expect("at least one chain"), states))
}
