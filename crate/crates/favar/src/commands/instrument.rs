use std::path::Path;

use favar_core::calendar::{Day, Month};
use favar_core::instrument::{build_instrument as build_events, events_to_monthly, AnnouncementPanel, InstrumentMethod};
use nalgebra::DMatrix;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::table::{fmt_f64, write_rows, MonthTable, Table};

pub const RATE_COLUMNS: [&str; 4] = ["ois_1m", "ois_3m", "ois_6m", "ois_1y"];
pub const STOCK_COLUMN: &str = "stoxx";

pub fn read_announcements(path: &Path, exclusions: Vec<Day>) -> CliResult<AnnouncementPanel> {
    let t = Table::<Day>::read(path)?;
    let col = |name: &str| {
        t.names.iter().position(|n| n == name).ok_or_else(|| CliError::format(path, format!("missing column {name}")))
    };
    let rates: Vec<usize> = RATE_COLUMNS.iter().map(|n| col(n)).collect::<CliResult<_>>()?;
    let stock = col(STOCK_COLUMN)?;
    let ois = DMatrix::from_fn(t.dates.len(), 4, |k, c| t.values[(k, rates[c])]);
    let stock = t.values.column(stock).iter().copied().collect();
    let mut panel = AnnouncementPanel::new(t.dates, ois, stock);
    panel.exclusions = exclusions;
    Ok(panel)
}

/// Event-level instrument in `instrument_events.csv`, monthly sums in
/// `m.csv` and, for the rotational method, `cbi.csv`.
pub fn build_instrument(config: &RunConfig, out: &Path) -> CliResult<String> {
    let c = &config.instrument;
    let exclusions = c
        .exclude_dates
        .iter()
        .map(|d| Day::parse(d).map_err(|e| CliError::Config(format!("exclude date '{d}': {e}"))))
        .collect::<CliResult<Vec<Day>>>()?;
    let panel = read_announcements(&c.announcements, exclusions)?;
    let (dates, m, cbi) = build_events(&panel, c.method)?;
    let calendar: Vec<Month> = match &c.calendar {
        Some(path) => MonthTable::read(path)?.dates,
        None => match (dates.first(), dates.last()) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.month(), b.month());
                (0..=(b.index() - a.index())).map(|k| a.offset(k)).collect()
            }
            _ => Vec::new(),
        },
    };
    let monthly = |values: &[f64], name: &str| {
        let v = events_to_monthly(&dates, values, &calendar);
        MonthTable::new(vec![name.to_string()], calendar.clone(), DMatrix::from_column_slice(v.len(), 1, &v))
    };
    monthly(&m, "m").write(&out.join("m.csv"))?;
    let rows = (0..dates.len()).map(|k| {
        let mut row = vec![dates[k].to_string(), fmt_f64(m[k])];
        if let Some(cbi) = &cbi {
            row.push(fmt_f64(cbi[k]));
        }
        row
    });
    let header: &[&str] = if cbi.is_some() { &["date", "m", "cbi"] } else { &["date", "m"] };
    write_rows(&out.join("instrument_events.csv"), header, rows)?;
    if let Some(cbi) = &cbi {
        monthly(cbi, "cbi").write(&out.join("cbi.csv"))?;
    }
    let method = match c.method {
        InstrumentMethod::Rotational => "rotational",
        InstrumentMethod::PoorMans => "poor-mans",
        InstrumentMethod::Ois3m => "ois3m",
        InstrumentMethod::PcRaw => "pc-raw",
    };
    Ok(format!("{method} instrument from {} events over {} months into {}", dates.len(), calendar.len(), out.display()))
}
