//! Period and country studies: split a CAPE series into labeled periods,
//! estimate each period's potential around its own mean and classify it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::histogram::{
    deviations_with, estimate_potential, BinningConfig, DeviationMode, EmpiricalPotential,
    HistogramError,
};
use crate::models::{classify, Classification, ClassifyConfig, FitError};
use crate::valuation::CapeSeries;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("period {0} has no CAPE values")]
    EmptyPeriod(String),
    #[error("{label} has {months} months of CAPE values, need at least {required}")]
    InsufficientData {
        label: String,
        months: usize,
        required: usize,
    },
    #[error("invalid period set: {0}")]
    InvalidPeriods(String),
    #[error("no series to analyze")]
    EmptyBatch,
    #[error("{label}: {source}")]
    Histogram {
        label: String,
        source: HistogramError,
    },
    #[error("{label}: {source}")]
    Fit { label: String, source: FitError },
}

/// A labeled span of months, both ends inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub label: String,
    pub start: YearMonth,
    pub end: YearMonth,
}

impl PeriodSpec {
    pub fn new(
        label: impl Into<String>,
        start: YearMonth,
        end: YearMonth,
    ) -> Result<Self, AnalysisError> {
        let label = label.into();
        if start > end {
            return Err(AnalysisError::InvalidPeriods(format!(
                "{label}: start {start} is after end {end}"
            )));
        }
        Ok(Self { label, start, end })
    }

    pub fn contains(&self, m: YearMonth) -> bool {
        self.start <= m && m <= self.end
    }
}

/// Checks that periods are ordered and pairwise disjoint.
pub fn validate_periods(periods: &[PeriodSpec]) -> Result<(), AnalysisError> {
    for p in periods {
        if p.start > p.end {
            return Err(AnalysisError::InvalidPeriods(format!(
                "{}: start after end",
                p.label
            )));
        }
    }
    for w in periods.windows(2) {
        if w[1].start <= w[0].end {
            return Err(AnalysisError::InvalidPeriods(format!(
                "{} overlaps or precedes {}",
                w[1].label, w[0].label
            )));
        }
    }
    Ok(())
}

/// The four US periods. The shared boundary year 1913 belongs to the
/// second period, so the first ends in December 1912.
pub fn default_us_periods() -> Vec<PeriodSpec> {
    let ym = |y, m| YearMonth::new(y, m).expect("valid month");
    vec![
        PeriodSpec {
            label: "(i) 1881–1913".into(),
            start: ym(1881, 1),
            end: ym(1912, 12),
        },
        PeriodSpec {
            label: "(ii) 1913–1945".into(),
            start: ym(1913, 1),
            end: ym(1945, 12),
        },
        PeriodSpec {
            label: "(iii) 1946–1977".into(),
            start: ym(1946, 1),
            end: ym(1977, 12),
        },
        PeriodSpec {
            label: "(iv) 1978–2010".into(),
            start: ym(1978, 1),
            end: ym(2010, 12),
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub binning: BinningConfig,
    pub mode: DeviationMode,
    pub classify: ClassifyConfig,
    /// Fewest monthly values a period or country may have.
    pub min_months: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            binning: BinningConfig::default(),
            mode: DeviationMode::Raw,
            classify: ClassifyConfig::default(),
            min_months: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub label: String,
    pub period: String,
    pub start: YearMonth,
    pub end: YearMonth,
    pub months: usize,
    pub mean: f64,
    pub potential: EmpiricalPotential,
    pub classification: Classification,
}

/// Deviations from the segment's own mean, binned and classified.
pub fn analyze_segment(
    series: &CapeSeries,
    period: &str,
    config: &AnalysisConfig,
) -> Result<SegmentReport, AnalysisError> {
    let label = series.label().to_string();
    let tag = if period.is_empty() {
        label.clone()
    } else {
        format!("{label} {period}")
    };
    if series.len() < config.min_months {
        return Err(AnalysisError::InsufficientData {
            label: tag,
            months: series.len(),
            required: config.min_months,
        });
    }
    let hist_err = |source| AnalysisError::Histogram {
        label: tag.clone(),
        source,
    };
    let devs = deviations_with(series, config.mode).map_err(hist_err)?;
    let potential = estimate_potential(&devs, &config.binning)
        .map_err(hist_err)?
        .with_provenance(label.clone(), period);
    let classification =
        classify(&potential, &config.classify).map_err(|source| AnalysisError::Fit {
            label: tag.clone(),
            source,
        })?;
    Ok(SegmentReport {
        label,
        period: period.to_string(),
        start: series.first_date(),
        end: series.last_date(),
        months: series.len(),
        mean: series.mean(),
        potential,
        classification,
    })
}

/// One report per period; a failing period does not stop the others.
pub fn per_period_analysis(
    series: &CapeSeries,
    periods: &[PeriodSpec],
    config: &AnalysisConfig,
) -> Result<Vec<Result<SegmentReport, AnalysisError>>, AnalysisError> {
    validate_periods(periods)?;
    Ok(periods
        .par_iter()
        .map(|p| {
            let part = series
                .between(p.start, p.end)
                .ok_or_else(|| AnalysisError::EmptyPeriod(p.label.clone()))?;
            analyze_segment(&part, &p.label, config)
        })
        .collect())
}

/// Per-series outcomes keyed by series label.
pub type LabeledReports = Vec<(String, Result<SegmentReport, AnalysisError>)>;

/// One report per series over its full window, sorted by label.
pub fn multi_country_analysis(
    series_set: &[CapeSeries],
    config: &AnalysisConfig,
) -> Result<LabeledReports, AnalysisError> {
    if series_set.is_empty() {
        return Err(AnalysisError::EmptyBatch);
    }
    let mut out: Vec<_> = series_set
        .par_iter()
        .map(|s| (s.label().to_string(), analyze_segment(s, "", config)))
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_periods() {
        let p = default_us_periods();
        assert_eq!(p.len(), 4);
        assert_eq!(p[0].label, "(i) 1881–1913");
        assert_eq!(p[0].end, YearMonth::new(1912, 12).unwrap());
        assert_eq!(p[1].start, YearMonth::new(1913, 1).unwrap());
        assert_eq!(p[3].end, YearMonth::new(2010, 12).unwrap());
        validate_periods(&p).unwrap();
    }

    #[test]
    fn overlap_rejected() {
        let ym = |y| YearMonth::new(y, 1).unwrap();
        let p = vec![
            PeriodSpec::new("a", ym(2000), ym(2002)).unwrap(),
            PeriodSpec::new("b", ym(2002), ym(2004)).unwrap(),
        ];
        assert!(matches!(
            validate_periods(&p),
            Err(AnalysisError::InvalidPeriods(_))
        ));
        assert!(PeriodSpec::new("c", ym(2003), ym(2001)).is_err());
    }

    #[test]
    fn constant_series_surfaces_degenerate_range() {
        let start = YearMonth::new(2000, 1).unwrap();
        let dates: Vec<_> = (0..48).map(|i| start.add_months(i)).collect();
        let s = CapeSeries::new("flat", dates, vec![15.0; 48]).unwrap();
        let periods = vec![
            PeriodSpec::new("a", start, start.add_months(23)).unwrap(),
            PeriodSpec::new("b", start.add_months(24), start.add_months(47)).unwrap(),
        ];
        let out = per_period_analysis(&s, &periods, &AnalysisConfig::default()).unwrap();
        assert_eq!(out.len(), 2);
        for r in out {
            assert!(matches!(
                r,
                Err(AnalysisError::Histogram {
                    source: HistogramError::DegenerateRange,
                    ..
                })
            ));
        }
    }

    #[test]
    fn empty_and_short_periods() {
        let start = YearMonth::new(2000, 1).unwrap();
        let dates: Vec<_> = (0..30).map(|i| start.add_months(i)).collect();
        let s = CapeSeries::new("s", dates, (0..30).map(|i| i as f64).collect()).unwrap();
        let periods = vec![
            PeriodSpec::new(
                "before",
                YearMonth::new(1990, 1).unwrap(),
                YearMonth::new(1990, 12).unwrap(),
            )
            .unwrap(),
            PeriodSpec::new("short", start, start.add_months(9)).unwrap(),
        ];
        let out = per_period_analysis(&s, &periods, &AnalysisConfig::default()).unwrap();
        assert_eq!(out[0], Err(AnalysisError::EmptyPeriod("before".into())));
        assert!(matches!(
            out[1],
            Err(AnalysisError::InsufficientData { months: 10, .. })
        ));
        assert_eq!(
            multi_country_analysis(&[], &AnalysisConfig::default()),
            Err(AnalysisError::EmptyBatch)
        );
    }
}
