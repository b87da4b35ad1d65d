//! Market potentials estimated from valuation time series.
//!
//! The pipeline reads monthly price, earnings and CPI data, computes the
//! cyclically adjusted price-to-earnings ratio (CAPE), bins the deviations
//! of CAPE from its mean into an empirical potential `-ln rho`, and fits
//! closed-form potential families to decide whether a market was mean
//! reverting, trending or under a constant force. The [`maxent`] module
//! holds the Gibbs-density numerics and [`simulator`] produces synthetic
//! series with a known potential for end-to-end checks.

pub mod calendar;
pub mod histogram;
pub mod ingest;
pub mod maxent;
pub mod models;
pub mod periods;
pub mod quadrature;
pub mod roots;
pub mod simulator;
pub mod valuation;

pub use calendar::{ParseMonthError, YearMonth};
pub use histogram::{
    default_bin_count, deviations, deviations_with, estimate_potential, log_deviations, BinRange,
    BinningConfig, DeviationMode, EmpiricalPotential, HistogramError,
};
pub use ingest::{
    parse_cape_csv, parse_us_csv, read_cape_csv, read_price_csv, CapeColumns, IngestError,
    MonthlyRecord, PriceColumns, RawSeries,
};
pub use maxent::{
    dh_de_check, discrete_gibbs, gibbs_density, solve_beta, thermo, Domain, GibbsDensity,
    MaxEntError, MaxEntSolution, PotentialKind, PotentialSpec, Table,
};
pub use models::{
    classify, fit_family, Classification, ClassifyConfig, Family, FitError, FitOptions, FitResult,
    Verdict,
};
pub use periods::{
    default_us_periods, multi_country_analysis, per_period_analysis, AnalysisConfig, AnalysisError,
    LabeledReports, PeriodSpec, SegmentReport,
};
pub use simulator::{sample_stationary, SimConfig, SimError};
pub use valuation::{
    compute_cape, real_adjust, real_adjust_latest, CapeOptions, CapeOutcome, CapeSeries,
    ValuationError, WindowAlignment,
};
