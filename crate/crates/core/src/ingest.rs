//! Monthly CSV ingestion.
//!
//! Two layouts are understood:
//!
//! * raw price files with date, nominal price, nominal earnings and CPI
//!   columns (Shiller's layout), read into a [`RawSeries`];
//! * valuation files that already carry a CAPE column for one market,
//!   read straight into a [`CapeSeries`].
//!
//! Input is comma-delimited UTF-8 with one header row. Blank cells mean
//! "missing". Row numbers in errors count data rows from 1; the header is
//! not counted.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::valuation::CapeSeries;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: malformed date `{value}`")]
    MalformedDate { row: usize, value: String },
    #[error("row {row}: column `{column}` has unparseable value `{value}`")]
    MalformedNumber {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: column `{column}` has invalid value {value}")]
    InvalidValue {
        row: usize,
        column: String,
        value: f64,
    },
    #[error("row {row}: dates are not strictly increasing ({previous} then {found})")]
    NonMonotonicDates {
        row: usize,
        previous: YearMonth,
        found: YearMonth,
    },
    #[error("row {row}: gap in monthly dates (expected {expected}, found {found})")]
    GapDetected {
        row: usize,
        expected: YearMonth,
        found: YearMonth,
    },
    #[error("series label must be non-empty")]
    EmptyLabel,
}

impl IngestError {
    /// Data row (1-based) the error refers to, if it is row-specific.
    pub fn row(&self) -> Option<usize> {
        match self {
            Self::Csv { row, .. }
            | Self::MalformedDate { row, .. }
            | Self::MalformedNumber { row, .. }
            | Self::InvalidValue { row, .. }
            | Self::NonMonotonicDates { row, .. }
            | Self::GapDetected { row, .. } => Some(*row),
            _ => None,
        }
    }
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// One month of nominal market data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyRecord {
    pub date: YearMonth,
    pub price: f64,
    pub earnings: Option<f64>,
    pub cpi: Option<f64>,
}

/// A validated, gap-free monthly series for one market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    label: String,
    records: Vec<MonthlyRecord>,
}

impl RawSeries {
    /// Validates the record invariants: non-empty, positive prices and
    /// CPI, finite earnings, strictly increasing gap-free dates.
    pub fn new(label: impl Into<String>, records: Vec<MonthlyRecord>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(IngestError::EmptyLabel);
        }
        if records.is_empty() {
            return Err(IngestError::EmptyFile);
        }
        for (i, r) in records.iter().enumerate() {
            let row = i + 1;
            check_positive(row, "price", r.price)?;
            if let Some(cpi) = r.cpi {
                check_positive(row, "cpi", cpi)?;
            }
            if let Some(e) = r.earnings {
                if !e.is_finite() {
                    return Err(IngestError::InvalidValue {
                        row,
                        column: "earnings".into(),
                        value: e,
                    });
                }
            }
        }
        check_dates(records.iter().map(|r| r.date))?;
        Ok(Self { label, records })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn records(&self) -> &[MonthlyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn first_date(&self) -> YearMonth {
        self.records[0].date
    }

    pub fn last_date(&self) -> YearMonth {
        self.records[self.records.len() - 1].date
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(IngestError::EmptyLabel);
        }
        self.label = label;
        Ok(self)
    }

    pub(crate) fn from_parts_unchecked(label: String, records: Vec<MonthlyRecord>) -> Self {
        Self { label, records }
    }
}

fn check_positive(row: usize, column: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(IngestError::InvalidValue {
            row,
            column: column.to_string(),
            value,
        })
    }
}

/// Dates must advance by exactly one month per row.
pub(crate) fn check_dates(dates: impl IntoIterator<Item = YearMonth>) -> Result<()> {
    let mut prev: Option<YearMonth> = None;
    for (i, date) in dates.into_iter().enumerate() {
        let row = i + 1;
        if let Some(p) = prev {
            if date <= p {
                return Err(IngestError::NonMonotonicDates {
                    row,
                    previous: p,
                    found: date,
                });
            }
            if date != p.succ() {
                return Err(IngestError::GapDetected {
                    row,
                    expected: p.succ(),
                    found: date,
                });
            }
        }
        prev = Some(date);
    }
    Ok(())
}

/// Header names of the raw price layout. Matching ignores ASCII case and
/// surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriceColumns {
    pub date: String,
    pub price: String,
    pub earnings: String,
    pub cpi: String,
}

impl Default for PriceColumns {
    fn default() -> Self {
        Self {
            date: "Date".into(),
            price: "P".into(),
            earnings: "E".into(),
            cpi: "CPI".into(),
        }
    }
}

/// Header names of the CAPE layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapeColumns {
    pub date: String,
    pub cape: String,
}

impl Default for CapeColumns {
    fn default() -> Self {
        Self {
            date: "Date".into(),
            cape: "CAPE".into(),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Label derived from a file name: the stem, e.g. `japan` for `japan.csv`.
pub fn label_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "series".to_string())
}

/// Reads a raw price file. The series is labelled with the file stem.
pub fn parse_us_csv(path: &Path, columns: &PriceColumns) -> Result<RawSeries> {
    read_price_csv(open(path)?, columns, &label_from_path(path))
}

/// Reads a one-market CAPE file. The series is labelled with the file stem.
pub fn parse_cape_csv(path: &Path, columns: &CapeColumns) -> Result<CapeSeries> {
    read_cape_csv(open(path)?, columns, &label_from_path(path))
}

struct Table {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| IngestError::Csv {
                row: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| IngestError::Csv {
                row: i + 1,
                message: e.to_string(),
            })?;
            // fully blank lines at the end of spreadsheet exports
            if rec.iter().all(str::is_empty) {
                continue;
            }
            rows.push(rec);
        }
        if rows.is_empty() {
            return Err(IngestError::EmptyFile);
        }
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    }
}

fn cell(rec: &csv::StringRecord, idx: usize) -> &str {
    rec.get(idx).unwrap_or("")
}

fn parse_date(row: usize, rec: &csv::StringRecord, idx: usize) -> Result<YearMonth> {
    let raw = cell(rec, idx);
    YearMonth::parse(raw).map_err(|_| IngestError::MalformedDate {
        row,
        value: raw.to_string(),
    })
}

fn parse_number(row: usize, column: &str, raw: &str) -> Result<Option<f64>> {
    if raw.is_empty() {
        return Ok(None);
    }
    match raw.parse::<f64>() {
        Ok(v) if !v.is_nan() => Ok(Some(v)),
        _ => Err(IngestError::MalformedNumber {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        }),
    }
}

fn required(row: usize, column: &str, raw: &str) -> Result<f64> {
    parse_number(row, column, raw)?.ok_or_else(|| IngestError::MalformedNumber {
        row,
        column: column.to_string(),
        value: String::new(),
    })
}

/// Reads the raw price layout from any reader.
pub fn read_price_csv<R: Read>(
    reader: R,
    columns: &PriceColumns,
    label: &str,
) -> Result<RawSeries> {
    let table = Table::read(reader)?;
    let date_col = table.column(&columns.date)?;
    let price_col = table.column(&columns.price)?;
    let earn_col = table.column(&columns.earnings)?;
    let cpi_col = table.column(&columns.cpi)?;

    let mut records = Vec::with_capacity(table.rows.len());
    for (i, rec) in table.rows.iter().enumerate() {
        let row = i + 1;
        let date = parse_date(row, rec, date_col)?;
        let price = required(row, &columns.price, cell(rec, price_col))?;
        let earnings = parse_number(row, &columns.earnings, cell(rec, earn_col))?;
        let cpi = parse_number(row, &columns.cpi, cell(rec, cpi_col))?;
        records.push(MonthlyRecord {
            date,
            price,
            earnings,
            cpi,
        });
    }
    RawSeries::new(label, records)
}

/// Reads the CAPE layout from any reader.
pub fn read_cape_csv<R: Read>(reader: R, columns: &CapeColumns, label: &str) -> Result<CapeSeries> {
    let table = Table::read(reader)?;
    let date_col = table.column(&columns.date)?;
    let cape_col = table.column(&columns.cape)?;

    let mut dates = Vec::with_capacity(table.rows.len());
    let mut values = Vec::with_capacity(table.rows.len());
    for (i, rec) in table.rows.iter().enumerate() {
        let row = i + 1;
        dates.push(parse_date(row, rec, date_col)?);
        let v = required(row, &columns.cape, cell(rec, cape_col))?;
        if !v.is_finite() {
            return Err(IngestError::InvalidValue {
                row,
                column: columns.cape.clone(),
                value: v,
            });
        }
        values.push(v);
    }
    check_dates(dates.iter().copied())?;
    if label.trim().is_empty() {
        return Err(IngestError::EmptyLabel);
    }
    Ok(CapeSeries::new(label, dates, values).expect("validated above"))
}

/// Writes a raw series in the default column layout. Numbers use the
/// shortest representation that parses back to the same `f64`.
pub fn write_price_csv<W: Write>(series: &RawSeries, writer: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let cols = PriceColumns::default();
    w.write_record([&cols.date, &cols.price, &cols.earnings, &cols.cpi])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in series.records() {
        w.write_record([
            r.date.to_string(),
            r.price.to_string(),
            opt(r.earnings),
            opt(r.cpi),
        ])?;
    }
    w.flush()
}
