//! Date-indexed CSV tables: a header row of series names and one row per
//! date, the date in the first column.

use std::fmt::Display;
use std::fs;
use std::path::Path;

use favar_core::calendar::{Day, Month};
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

/// Row key of a table.
pub trait DateKey: Copy + Display + PartialEq {
    fn parse_key(s: &str) -> favar_core::Result<Self>;
}

impl DateKey for Month {
    fn parse_key(s: &str) -> favar_core::Result<Self> {
        Month::parse(s)
    }
}

impl DateKey for Day {
    fn parse_key(s: &str) -> favar_core::Result<Self> {
        Day::parse(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table<K> {
    pub names: Vec<String>,
    pub dates: Vec<K>,
    /// Rows are dates; empty cells are NaN.
    pub values: DMatrix<f64>,
}

pub type MonthTable = Table<Month>;

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

impl<K: DateKey> Table<K> {
    pub fn new(names: Vec<String>, dates: Vec<K>, values: DMatrix<f64>) -> Self {
        Table { names, dates, values }
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
        if header.len() < 2 {
            return Err(CliError::format(path, "expected a date column and at least one series"));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut cells = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = row + 2;
            let date = K::parse_key(&record[0]).map_err(|e| CliError::format(path, format!("line {line}: {e}")))?;
            dates.push(date);
            for (c, cell) in record.iter().skip(1).enumerate() {
                let v = if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    f64::NAN
                } else {
                    cell.parse::<f64>().map_err(|_| {
                        CliError::format(path, format!("line {line}, column {}: '{cell}' is not a number", names[c]))
                    })?
                };
                cells.push(v);
            }
        }
        let values = DMatrix::from_row_slice(dates.len(), names.len(), &cells);
        Ok(Table { names, dates, values })
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut out = String::from("date");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, d) in self.dates.iter().enumerate() {
            out.push_str(&d.to_string());
            for j in 0..self.names.len() {
                out.push(',');
                let v = self.values[(t, j)];
                if !v.is_nan() {
                    out.push_str(&fmt_f64(v));
                }
            }
            out.push('\n');
        }
        write_file(path, out.as_bytes())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.values.column(j).iter().copied().collect())
    }
}

pub fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// Write a file, creating its parent directory.
pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Rows of a plain CSV with a header, as strings.
pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}
