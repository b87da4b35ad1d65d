//! Empirical market potential from a histogram of CAPE deviations.
//!
//! The deviations `d_k = p_k - mean(p)` are binned on `n` equal-width bins
//! with edges `a_0 < ... < a_n`. Bin `i` has midpoint `x_i`, relative
//! frequency `rho_i = count_i / M` and potential `phi_i = -ln rho_i`.
//! Bins are half-open `[a_{i-1}, a_i)` except the last, which is closed, so
//! every sample inside `[a_0, a_n]` is counted exactly once.

use serde::{Deserialize, Serialize};

use crate::valuation::CapeSeries;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HistogramError {
    #[error("all deviations are equal; an automatic range would be empty")]
    DegenerateRange,
    #[error("invalid binning: {0}")]
    InvalidConfig(String),
    #[error("no samples to bin")]
    NoSamples,
    #[error("log deviations need positive values (found {0})")]
    NonPositiveValue(f64),
}

/// Binning range, in deviation units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum BinRange {
    /// From the smallest to the largest sample.
    #[default]
    Auto,
    Explicit {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinningConfig {
    /// `None` selects [`default_bin_count`] for the sample size.
    pub n_bins: Option<usize>,
    pub range: BinRange,
}

impl BinningConfig {
    pub fn with_bins(n_bins: usize) -> Self {
        Self {
            n_bins: Some(n_bins),
            range: BinRange::Auto,
        }
    }

    pub fn explicit(n_bins: usize, lo: f64, hi: f64) -> Self {
        Self {
            n_bins: Some(n_bins),
            range: BinRange::Explicit { lo, hi },
        }
    }

    pub fn validate(&self) -> Result<(), HistogramError> {
        if let Some(n) = self.n_bins {
            if n < 2 {
                return Err(HistogramError::InvalidConfig(format!(
                    "need at least 2 bins, got {n}"
                )));
            }
        }
        if let BinRange::Explicit { lo, hi } = self.range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(HistogramError::InvalidConfig(format!(
                    "range [{lo}, {hi}] must satisfy lo < hi"
                )));
            }
        }
        Ok(())
    }
}

/// `max(5, ceil(sqrt(M)))`, capped at 40.
pub fn default_bin_count(sample_count: usize) -> usize {
    let root = (sample_count as f64).sqrt().ceil() as usize;
    root.clamp(5, 40)
}

/// How CAPE values are turned into deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviationMode {
    /// `p_k - mean(p)`.
    #[default]
    Raw,
    /// `ln p_k - mean(ln p)`.
    Log,
}

/// `p_k - mean(p)` in input order.
pub fn deviations(series: &CapeSeries) -> Vec<f64> {
    let mean = series.mean();
    series.values().iter().map(|p| p - mean).collect()
}

/// `ln p_k - mean(ln p)` in input order.
pub fn log_deviations(series: &CapeSeries) -> Result<Vec<f64>, HistogramError> {
    let logs = series
        .values()
        .iter()
        .map(|&p| {
            if p > 0.0 {
                Ok(p.ln())
            } else {
                Err(HistogramError::NonPositiveValue(p))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs.into_iter().map(|l| l - mean).collect())
}

pub fn deviations_with(
    series: &CapeSeries,
    mode: DeviationMode,
) -> Result<Vec<f64>, HistogramError> {
    match mode {
        DeviationMode::Raw => Ok(deviations(series)),
        DeviationMode::Log => log_deviations(series),
    }
}

/// Binned frequencies and the potential samples derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPotential {
    pub label: String,
    pub period: String,
    /// Bin edges `a_0..=a_n`.
    pub edges: Vec<f64>,
    pub midpoints: Vec<f64>,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    /// `-ln rho_i`, absent for empty bins.
    pub potential: Vec<Option<f64>>,
    /// Total number of deviations `M`, including any outside the range.
    pub sample_count: usize,
}

impl EmpiricalPotential {
    pub fn n_bins(&self) -> usize {
        self.midpoints.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.edges[self.edges.len() - 1] - self.edges[0]) / self.n_bins() as f64
    }

    /// Samples that fell inside `[a_0, a_n]`.
    pub fn in_range_count(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `(x_i, phi_i, count_i)` for the bins where the potential is defined.
    pub fn defined_points(&self) -> impl Iterator<Item = (f64, f64, u64)> + '_ {
        self.midpoints
            .iter()
            .zip(&self.potential)
            .zip(&self.counts)
            .filter_map(|((&x, phi), &c)| phi.map(|p| (x, p, c)))
    }

    pub fn with_provenance(mut self, label: impl Into<String>, period: impl Into<String>) -> Self {
        self.label = label.into();
        self.period = period.into();
        self
    }
}

/// Bins the deviations and takes `-ln` of the relative frequencies.
pub fn estimate_potential(
    deviations: &[f64],
    config: &BinningConfig,
) -> Result<EmpiricalPotential, HistogramError> {
    config.validate()?;
    if deviations.is_empty() {
        return Err(HistogramError::NoSamples);
    }
    if let Some(bad) = deviations.iter().find(|d| !d.is_finite()) {
        return Err(HistogramError::InvalidConfig(format!(
            "non-finite deviation {bad}"
        )));
    }
    let m = deviations.len();
    let n = config.n_bins.unwrap_or_else(|| default_bin_count(m));
    let (lo, hi) = match config.range {
        BinRange::Explicit { lo, hi } => (lo, hi),
        BinRange::Auto => {
            let lo = deviations.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = deviations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if lo >= hi {
                return Err(HistogramError::DegenerateRange);
            }
            (lo, hi)
        }
    };

    let width = (hi - lo) / n as f64;
    let mut edges: Vec<f64> = (0..=n).map(|i| lo + i as f64 * width).collect();
    edges[n] = hi;

    let mut counts = vec![0u64; n];
    for &d in deviations {
        if let Some(i) = bin_index(&edges, width, d) {
            counts[i] += 1;
        }
    }

    let midpoints = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / m as f64).collect();
    let potential = frequencies
        .iter()
        .map(|&rho| (rho > 0.0).then(|| -rho.ln()))
        .collect();

    Ok(EmpiricalPotential {
        label: String::new(),
        period: String::new(),
        edges,
        midpoints,
        counts,
        frequencies,
        potential,
        sample_count: m,
    })
}

fn bin_index(edges: &[f64], width: f64, d: f64) -> Option<usize> {
    let n = edges.len() - 1;
    if d < edges[0] || d > edges[n] {
        return None;
    }
    let mut i = (((d - edges[0]) / width).floor() as usize).min(n - 1);
    // the arithmetic guess can be off by one next to an edge
    while i > 0 && d < edges[i] {
        i -= 1;
    }
    while i < n - 1 && d >= edges[i + 1] {
        i += 1;
    }
    Some(i)
}
