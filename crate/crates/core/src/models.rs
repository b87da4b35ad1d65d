//! Closed-form potential families fitted to an empirical potential, and the
//! market classification that follows from the best fit.
//!
//! Each family is linear in a slope `s` and an offset `c`:
//!
//! | family           | model                       | verdict        |
//! |------------------|-----------------------------|----------------|
//! | `Quadratic`      | `s x^2 + c`                 | reverting      |
//! | `LogRegularized` | `s ln(eps + abs(x)) + c`    | trending       |
//! | `Linear`         | `s abs(x) + c`              | constant force |
//!
//! The slope stands for `beta * C`; the two are not separately
//! identifiable from one curve. The free offset absorbs `ln Z` and the
//! arbitrary constant in `-ln rho`. Fits are least squares on the defined
//! bins weighted by bin counts, and families are compared by AICc.

use serde::{Deserialize, Serialize};

use crate::histogram::EmpiricalPotential;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least 3 bins with a defined potential, got {0}")]
    TooFewBins(usize),
    #[error("{0:?} basis is constant over the bins; slope is not identifiable")]
    SingularDesign(Family),
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quadratic,
    LogRegularized,
    Linear,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Quadratic, Family::LogRegularized, Family::Linear];

    /// The basis function multiplying the slope.
    pub fn basis(self, x: f64, epsilon: f64) -> f64 {
        match self {
            Family::Quadratic => x * x,
            Family::LogRegularized => (epsilon + x.abs()).ln(),
            Family::Linear => x.abs(),
        }
    }

    pub fn verdict(self) -> Verdict {
        match self {
            Family::Quadratic => Verdict::Reverting,
            Family::LogRegularized => Verdict::Trending,
            Family::Linear => Verdict::ConstantForce,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::LogRegularized => "log_regularized",
            Family::Linear => "linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Reverting,
    Trending,
    ConstantForce,
    Ambiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    /// Fitted `beta * C`.
    pub slope: f64,
    pub offset: f64,
    /// Regularization used by the log family.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    /// Weighted residual sum of squares; weights are normalized to mean 1.
    pub rss: f64,
    pub n_points: usize,
    pub aicc: f64,
}

/// Parameters per family: slope and offset.
pub const FIT_PARAMETERS: usize = 2;

/// Relative size of residuals treated as an exact fit when scoring.
const RSS_NOISE_FLOOR: f64 = 1e-10;

/// Small-sample corrected AIC for a least-squares fit with `k` parameters.
///
/// Residuals below `RSS_NOISE_FLOOR` of the data scale count as zero so
/// that two exact fits score equally instead of comparing rounding noise.
/// Infinite when `n <= k + 1`.
pub fn aicc(rss: f64, n: usize, k: usize, data_scale: f64) -> f64 {
    if n <= k + 1 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    let floor = nf * (RSS_NOISE_FLOOR * data_scale.max(1.0)).powi(2);
    let kf = k as f64;
    nf * (rss.max(floor) / nf).ln() + 2.0 * kf + 2.0 * kf * (kf + 1.0) / (nf - kf - 1.0)
}

/// Weighted least squares of `y ≈ slope * basis(x) + offset`.
///
/// `points` are `(x, y, weight)`; weights must be positive and are
/// rescaled to mean one.
pub fn fit_points(
    points: &[(f64, f64, f64)],
    family: Family,
    epsilon: f64,
) -> Result<FitResult, FitError> {
    let n = points.len();
    if n < FIT_PARAMETERS + 1 {
        return Err(FitError::TooFewBins(n));
    }
    if points
        .iter()
        .any(|&(x, y, w)| !(x.is_finite() && y.is_finite() && w.is_finite() && w > 0.0))
    {
        return Err(FitError::InvalidInput(
            "points need finite values and positive weights".into(),
        ));
    }
    if family == Family::LogRegularized && !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(FitError::InvalidInput(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let total_w: f64 = points.iter().map(|p| p.2).sum();
    let w: Vec<f64> = points.iter().map(|p| p.2 * n as f64 / total_w).collect();
    let b: Vec<f64> = points.iter().map(|p| family.basis(p.0, epsilon)).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();

    let sw: f64 = w.iter().sum();
    let b_mean = w.iter().zip(&b).map(|(w, b)| w * b).sum::<f64>() / sw;
    let y_mean = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let mut sbb = 0.0;
    let mut sby = 0.0;
    for i in 0..n {
        let db = b[i] - b_mean;
        sbb += w[i] * db * db;
        sby += w[i] * db * (y[i] - y_mean);
    }
    let b_scale = w.iter().zip(&b).map(|(w, b)| w * b * b).sum::<f64>() / sw;
    // also rejects NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(sbb > 1e-12 * sw * b_scale.max(f64::MIN_POSITIVE)) {
        return Err(FitError::SingularDesign(family));
    }
    let slope = sby / sbb;
    let offset = y_mean - slope * b_mean;
    let rss: f64 = (0..n)
        .map(|i| {
            let r = y[i] - slope * b[i] - offset;
            w[i] * r * r
        })
        .sum();
    let scale = y.iter().map(|v| (v - y_mean).abs()).fold(0.0, f64::max);
    Ok(FitResult {
        family,
        slope,
        offset,
        epsilon: (family == Family::LogRegularized).then_some(epsilon),
        rss,
        n_points: n,
        aicc: aicc(rss, n, FIT_PARAMETERS, scale),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Log-family regularization; `None` means half the bin width.
    pub log_epsilon: Option<f64>,
}

impl FitOptions {
    pub fn epsilon_for(&self, ep: &EmpiricalPotential) -> f64 {
        self.log_epsilon.unwrap_or_else(|| 0.5 * ep.bin_width())
    }
}

/// Fits one family to the defined bins of `ep`, weighting each bin by its
/// count.
pub fn fit_family(
    ep: &EmpiricalPotential,
    family: Family,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let points: Vec<(f64, f64, f64)> = ep
        .defined_points()
        .map(|(x, phi, c)| (x, phi, c as f64))
        .collect();
    fit_points(&points, family, options.epsilon_for(ep))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Minimum AICc lead of the best family over the runner-up.
    pub threshold: f64,
    pub fit: FitOptions,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            threshold: 2.0,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Lowest-AICc fit among families with a positive slope, or the
    /// lowest-AICc fit overall when no slope is positive.
    pub best: FitResult,
    /// Every family that could be fitted, in [`Family::ALL`] order.
    pub all: Vec<FitResult>,
    /// AICc of the runner-up minus AICc of `best`.
    pub margin: f64,
}

impl Classification {
    pub fn fit(&self, family: Family) -> Option<&FitResult> {
        self.all.iter().find(|f| f.family == family)
    }
}

/// Picks the family that best explains `ep`.
///
/// Only fits with a positive slope describe a confining potential, so a
/// family whose fitted slope is zero or negative cannot win. The verdict is
/// `Ambiguous` when the winner leads the runner-up by less than the
/// threshold or when no family has a positive slope.
pub fn classify(
    ep: &EmpiricalPotential,
    config: &ClassifyConfig,
) -> Result<Classification, FitError> {
    if !(config.threshold.is_finite() && config.threshold > 0.0) {
        return Err(FitError::InvalidInput(format!(
            "threshold must be positive, got {}",
            config.threshold
        )));
    }
    let mut all = Vec::new();
    let mut first_err = None;
    for family in Family::ALL {
        match fit_family(ep, family, &config.fit) {
            Ok(f) => all.push(f),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if all.len() < 2 {
        return Err(first_err.expect("at least one family failed"));
    }
    let mut ranked: Vec<&FitResult> = all.iter().collect();
    ranked.sort_by(|a, b| a.aicc.total_cmp(&b.aicc));

    let (best, verdict, margin) = match ranked.iter().find(|f| f.slope > 0.0) {
        None => (*ranked[0], Verdict::Ambiguous, 0.0),
        Some(b) => {
            let runner_up = ranked
                .iter()
                .find(|f| f.family != b.family)
                .map(|f| f.aicc)
                .unwrap_or(f64::INFINITY);
            let margin = runner_up - b.aicc;
            let margin = if margin.is_nan() { 0.0 } else { margin };
            let verdict = if margin < config.threshold {
                Verdict::Ambiguous
            } else {
                b.family.verdict()
            };
            (**b, verdict, margin)
        }
    };
    Ok(Classification {
        verdict,
        best,
        all,
        margin,
    })
}
