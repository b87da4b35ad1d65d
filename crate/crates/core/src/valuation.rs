//! Inflation adjustment and the cyclically adjusted price-earnings ratio.

use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::ingest::{MonthlyRecord, RawSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValuationError {
    #[error("CPI missing for {0}")]
    MissingCpi(YearMonth),
    #[error("CPI is not positive for {0}")]
    ZeroCpi(YearMonth),
    #[error("basis month {0} is outside the series")]
    BasisOutOfRange(YearMonth),
    #[error("window must be at least one month")]
    InvalidWindow,
    #[error("no month has a complete earnings window with a positive average")]
    InsufficientHistory,
    #[error("a CAPE series needs at least one value")]
    EmptySeries,
    #[error("dates and values differ in length ({dates} vs {values})")]
    LengthMismatch { dates: usize, values: usize },
    #[error("CAPE value at {0} is not finite")]
    NonFinite(YearMonth),
}

/// Monthly CAPE values for one market together with their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapeSeries {
    label: String,
    dates: Vec<YearMonth>,
    values: Vec<f64>,
    mean: f64,
}

impl CapeSeries {
    pub fn new(
        label: impl Into<String>,
        dates: Vec<YearMonth>,
        values: Vec<f64>,
    ) -> Result<Self, ValuationError> {
        if dates.len() != values.len() {
            return Err(ValuationError::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        if values.is_empty() {
            return Err(ValuationError::EmptySeries);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ValuationError::NonFinite(dates[i]));
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok(Self {
            label: label.into(),
            dates,
            values,
            mean,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Arithmetic mean of the values.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_date(&self) -> YearMonth {
        self.dates[0]
    }

    pub fn last_date(&self) -> YearMonth {
        self.dates[self.dates.len() - 1]
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The sub-series with dates in `start..=end`, or `None` if empty.
    pub fn between(&self, start: YearMonth, end: YearMonth) -> Option<Self> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        if lo >= hi {
            return None;
        }
        Self::new(
            self.label.clone(),
            self.dates[lo..hi].to_vec(),
            self.values[lo..hi].to_vec(),
        )
        .ok()
    }
}

/// Converts nominal prices and earnings to real values at the price level
/// of `basis`: each value is scaled by `cpi(basis) / cpi(t)`.
///
/// The CPI of every output record is set to `cpi(basis)`, so adjusting the
/// result again with the same basis is the identity.
pub fn real_adjust(series: &RawSeries, basis: YearMonth) -> Result<RawSeries, ValuationError> {
    let records = series.records();
    let idx = records
        .iter()
        .position(|r| r.date == basis)
        .ok_or(ValuationError::BasisOutOfRange(basis))?;
    let basis_cpi = cpi_of(&records[idx])?;
    let adjusted = records
        .iter()
        .map(|r| {
            let factor = basis_cpi / cpi_of(r)?;
            Ok(MonthlyRecord {
                date: r.date,
                price: r.price * factor,
                earnings: r.earnings.map(|e| e * factor),
                cpi: Some(basis_cpi),
            })
        })
        .collect::<Result<Vec<_>, ValuationError>>()?;
    Ok(RawSeries::from_parts_unchecked(
        series.label().to_string(),
        adjusted,
    ))
}

/// [`real_adjust`] at the latest month of the series.
pub fn real_adjust_latest(series: &RawSeries) -> Result<RawSeries, ValuationError> {
    real_adjust(series, series.last_date())
}

fn cpi_of(r: &MonthlyRecord) -> Result<f64, ValuationError> {
    match r.cpi {
        None => Err(ValuationError::MissingCpi(r.date)),
        Some(c) if c > 0.0 => Ok(c),
        Some(_) => Err(ValuationError::ZeroCpi(r.date)),
    }
}

/// Which months make up the earnings window of month `t`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAlignment {
    /// The `window` months strictly before `t`. With monthly data starting
    /// in January 1871 the first CAPE is January 1881.
    #[default]
    Preceding,
    /// The `window` months ending at and including `t`.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapeOptions {
    pub window_months: usize,
    pub alignment: WindowAlignment,
}

impl Default for CapeOptions {
    fn default() -> Self {
        Self {
            window_months: 120,
            alignment: WindowAlignment::Preceding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Some month of the earnings window has no earnings value.
    MissingEarnings,
    /// The window average is zero or negative.
    NonPositiveEarningsWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedMonth {
    pub month: YearMonth,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapeOutcome {
    pub series: CapeSeries,
    /// Months that had enough history but were skipped.
    pub skipped: Vec<SkippedMonth>,
}

/// Computes CAPE = real price / mean real earnings over the window.
///
/// `series` must already be real-adjusted. Months without a full window of
/// history are not emitted; months whose window has a missing earnings
/// value or a non-positive average are skipped and reported.
pub fn compute_cape(
    series: &RawSeries,
    options: CapeOptions,
) -> Result<CapeOutcome, ValuationError> {
    let window = options.window_months;
    if window == 0 {
        return Err(ValuationError::InvalidWindow);
    }
    let records = series.records();
    let lag = match options.alignment {
        WindowAlignment::Preceding => 1,
        WindowAlignment::Inclusive => 0,
    };
    let first = window + lag - 1;

    let mut dates = Vec::new();
    let mut values = Vec::new();
    let mut skipped = Vec::new();
    for t in first..records.len() {
        let end = t + 1 - lag;
        let span = &records[end - window..end];
        let mut sum = 0.0;
        let mut complete = true;
        for r in span {
            match r.earnings {
                Some(e) => sum += e,
                None => {
                    complete = false;
                    break;
                }
            }
        }
        let month = records[t].date;
        if !complete {
            log::warn!(
                "{}: skipping {month}: earnings window has missing values",
                series.label()
            );
            skipped.push(SkippedMonth {
                month,
                reason: SkipReason::MissingEarnings,
            });
            continue;
        }
        let avg = sum / window as f64;
        if avg <= 0.0 {
            log::warn!(
                "{}: skipping {month}: non-positive average earnings",
                series.label()
            );
            skipped.push(SkippedMonth {
                month,
                reason: SkipReason::NonPositiveEarningsWindow,
            });
            continue;
        }
        dates.push(month);
        values.push(records[t].price / avg);
    }
    if values.is_empty() {
        return Err(ValuationError::InsufficientHistory);
    }
    let series = CapeSeries::new(series.label(), dates, values)?;
    Ok(CapeOutcome { series, skipped })
}
