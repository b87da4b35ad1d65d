use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use potlab_core::ingest::label_from_path;
use potlab_core::{
    classify, compute_cape, default_us_periods, deviations_with, estimate_potential,
    multi_country_analysis, per_period_analysis, read_cape_csv, read_price_csv, real_adjust,
    real_adjust_latest, sample_stationary, AnalysisConfig, AnalysisError, BinRange, BinningConfig,
    CapeColumns, CapeOptions, CapeSeries, Classification, ClassifyConfig, Domain,
    EmpiricalPotential, FitOptions, FitResult, PeriodSpec, PotentialSpec, PriceColumns,
    SegmentReport, SimConfig, Verdict, YearMonth,
};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, Outcome};
use crate::output::{num, opt_num, slug, Run, SCHEMA_VERSION};
use crate::{
    BinningArgs, CapeArgs, ClassifyArgs, FamilyArg, FitArgs, PotentialArgs, ReportArgs,
    SimulateArgs,
};

/// Bundled data: `POTLAB_DATA_DIR` if set, else the repository's `data/`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("POTLAB_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn binning(args: &BinningArgs) -> Outcome<BinningConfig> {
    let range = match args.range.as_deref() {
        None => BinRange::Auto,
        Some(&[lo, hi]) => BinRange::Explicit { lo, hi },
        Some(_) => return Err(Failure::config(anyhow!("--range takes two values"))),
    };
    let config = BinningConfig {
        n_bins: args.bins,
        range,
    };
    config.validate()?;
    Ok(config)
}

fn classify_config(args: &ClassifyArgs) -> Outcome<ClassifyConfig> {
    if !(args.threshold.is_finite() && args.threshold > 0.0) {
        return Err(Failure::config(anyhow!("--threshold must be positive")));
    }
    if let Some(e) = args.epsilon {
        if !(e.is_finite() && e > 0.0) {
            return Err(Failure::config(anyhow!("--epsilon must be positive")));
        }
    }
    Ok(ClassifyConfig {
        threshold: args.threshold,
        fit: FitOptions {
            log_epsilon: args.epsilon,
        },
    })
}

/// Two columns, `x phi`, one row per bin.
fn plot_text(ep: &EmpiricalPotential) -> String {
    let mut out = String::new();
    for (x, phi) in ep.midpoints.iter().zip(&ep.potential) {
        writeln!(out, "{} {}", num(*x), opt_num(*phi)).expect("string write");
    }
    out
}

pub fn cape(args: &CapeArgs) -> Outcome {
    if args.window == 0 {
        return Err(Failure::config(anyhow!("--window must be at least 1")));
    }
    let mut run = Run::new("cape", &args.out_dir)?;
    let bytes = run.input(&args.input)?;
    let label = label_from_path(&args.input);
    let columns = PriceColumns {
        date: args.columns.date_col.clone(),
        price: args.columns.price_col.clone(),
        earnings: args.columns.earnings_col.clone(),
        cpi: args.columns.cpi_col.clone(),
    };
    let raw = read_price_csv(bytes.as_slice(), &columns, &label)?;
    let real = match args.basis {
        Some(b) => real_adjust(&raw, b)?,
        None => real_adjust_latest(&raw)?,
    };
    let outcome = compute_cape(
        &real,
        CapeOptions {
            window_months: args.window,
            alignment: args.alignment.into(),
        },
    )?;
    if !outcome.skipped.is_empty() {
        eprintln!(
            "warning: {} months skipped for incomplete earnings",
            outcome.skipped.len()
        );
    }
    let mut text = String::from("Date,CAPE\n");
    for (d, v) in outcome.series.dates().iter().zip(outcome.series.values()) {
        writeln!(text, "{d},{}", num(*v)).expect("string write");
    }
    let stem = format!("{}_cape", slug(&label));
    let path = run.write(&format!("{stem}.csv"), text.as_bytes())?;
    run.finish(&stem, args)?;
    println!(
        "{}: {} months, {} to {}",
        path.display(),
        outcome.series.len(),
        outcome.series.first_date(),
        outcome.series.last_date()
    );
    Ok(())
}

/// The JSON layout of an empirical potential.
#[derive(Debug, Serialize, Deserialize)]
struct PotentialFile {
    schema: u32,
    mode: crate::Mode,
    /// Mean of the CAPE values the deviations are taken from.
    mean: f64,
    #[serde(flatten)]
    potential: EmpiricalPotential,
}

fn period_name(start: YearMonth, end: YearMonth) -> String {
    format!("{start}..{end}")
}

pub fn potential(args: &PotentialArgs) -> Outcome {
    let config = binning(&args.binning)?;
    let mut run = Run::new("potential", &args.out_dir)?;
    let bytes = run.input(&args.input)?;
    let label = args
        .label
        .clone()
        .unwrap_or_else(|| label_from_path(&args.input));
    let columns = CapeColumns {
        date: args.date_col.clone(),
        cape: args.cape_col.clone(),
    };
    let full = read_cape_csv(bytes.as_slice(), &columns, &label)?;
    let series = select(&full, args.start, args.end)?;
    let devs = deviations_with(&series, args.binning.mode.into())?;
    let ep = estimate_potential(&devs, &config)?.with_provenance(
        label.clone(),
        period_name(series.first_date(), series.last_date()),
    );

    let stem = format!("{}_potential", slug(&label));
    let plot = run.write(&format!("{stem}.txt"), plot_text(&ep).as_bytes())?;
    let defined = ep.potential.iter().flatten().count();
    let n_bins = ep.n_bins();
    run.write_json(
        &format!("{stem}.json"),
        &PotentialFile {
            schema: SCHEMA_VERSION,
            mode: args.binning.mode,
            mean: series.mean(),
            potential: ep,
        },
    )?;
    run.finish(&stem, args)?;
    println!(
        "{}: {n_bins} bins, {defined} with a defined potential",
        plot.display()
    );
    Ok(())
}

fn select(
    series: &CapeSeries,
    start: Option<YearMonth>,
    end: Option<YearMonth>,
) -> Outcome<CapeSeries> {
    if start.is_none() && end.is_none() {
        return Ok(series.clone());
    }
    let s = start.unwrap_or(series.first_date());
    let e = end.unwrap_or(series.last_date());
    if s > e {
        return Err(Failure::config(anyhow!("--start {s} is after --end {e}")));
    }
    series
        .between(s, e)
        .ok_or_else(|| Failure::data(anyhow!("no CAPE values between {s} and {e}")))
}

#[derive(Debug, Serialize)]
struct FitEntry {
    family: &'static str,
    slope: f64,
    offset: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    rss: f64,
    aicc: f64,
    n_points: usize,
}

impl From<&FitResult> for FitEntry {
    fn from(f: &FitResult) -> Self {
        Self {
            family: f.family.name(),
            slope: f.slope,
            offset: f.offset,
            epsilon: f.epsilon,
            rss: f.rss,
            aicc: f.aicc,
            n_points: f.n_points,
        }
    }
}

#[derive(Debug, Serialize)]
struct ClassificationOut {
    verdict: Verdict,
    best: &'static str,
    margin: f64,
    fits: Vec<FitEntry>,
}

impl From<&Classification> for ClassificationOut {
    fn from(c: &Classification) -> Self {
        Self {
            verdict: c.verdict,
            best: c.best.family.name(),
            margin: c.margin,
            fits: c.all.iter().map(FitEntry::from).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
struct FitFile {
    schema: u32,
    label: String,
    period: String,
    #[serde(flatten)]
    classification: ClassificationOut,
}

pub fn fit(args: &FitArgs) -> Outcome {
    let config = classify_config(&args.classify)?;
    let mut run = Run::new("fit", &args.out_dir)?;
    let bytes = run.input(&args.input)?;
    let file: PotentialFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("{} is not a potential file", args.input.display()))
        .map_err(Failure::data)?;
    if file.schema != SCHEMA_VERSION {
        return Err(Failure::data(anyhow!("unsupported schema {}", file.schema)));
    }
    let ep = file.potential;
    check_potential(&ep)?;
    let c = classify(&ep, &config)?;
    let stem = format!("{}_fit", slug(&ep.label));
    let path = run.write_json(
        &format!("{stem}.json"),
        &FitFile {
            schema: SCHEMA_VERSION,
            label: ep.label.clone(),
            period: ep.period.clone(),
            classification: ClassificationOut::from(&c),
        },
    )?;
    run.finish(&stem, args)?;
    println!(
        "{}: {:?} (margin {:.3})",
        path.display(),
        c.verdict,
        c.margin
    );
    Ok(())
}

fn check_potential(ep: &EmpiricalPotential) -> Outcome {
    let n = ep.midpoints.len();
    if n == 0 || ep.potential.len() != n || ep.counts.len() != n || ep.edges.len() != n + 1 {
        return Err(Failure::data(anyhow!(
            "potential file has inconsistent bin arrays"
        )));
    }
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let domain = match args.domain.as_deref() {
        Some(&[lo, hi]) => Domain::new(lo, hi)?,
        Some(_) => return Err(Failure::config(anyhow!("--domain takes two values"))),
        None => Domain::symmetric(args.half_width)?,
    };
    let phi = match args.family {
        FamilyArg::Quadratic => PotentialSpec::quadratic(args.c, domain)?,
        FamilyArg::Linear => PotentialSpec::linear(args.c, domain)?,
        FamilyArg::Log => PotentialSpec::log_regularized(args.c, args.epsilon, domain)?,
    };
    let config = SimConfig {
        phi,
        beta: args.beta,
        n_samples: args.n,
        burn_in: args.burn_in,
        step: args.step,
        thin: args.thin,
        seed: args.seed,
    };
    config.validate()?;
    if args.name.is_empty() || args.name.contains(['/', '\\']) {
        return Err(Failure::config(anyhow!("--name must be a plain file stem")));
    }
    let samples = sample_stationary(&config)?;
    let mut run = Run::new("simulate", &args.out_dir)?;
    let mut text = String::with_capacity(samples.len() * 26 + 2);
    text.push_str("x\n");
    for x in &samples {
        writeln!(text, "{}", num(*x)).expect("string write");
    }
    let path = run.write(&format!("{}.csv", args.name), text.as_bytes())?;
    run.finish(&args.name, args)?;
    println!("{}: {} samples", path.display(), samples.len());
    Ok(())
}

fn parse_period(text: &str) -> Outcome<PeriodSpec> {
    let bad = || Failure::config(anyhow!("period `{text}` is not LABEL=YYYY-MM..YYYY-MM"));
    let (label, span) = text.rsplit_once('=').ok_or_else(bad)?;
    let (start, end) = span.split_once("..").ok_or_else(bad)?;
    let start = YearMonth::parse(start).map_err(|_| bad())?;
    let end = YearMonth::parse(end).map_err(|_| bad())?;
    Ok(PeriodSpec::new(label.trim(), start, end)?)
}

#[derive(Debug, Serialize)]
struct Bins<'a> {
    midpoints: &'a [f64],
    counts: &'a [u64],
    potential: &'a [Option<f64>],
}

#[derive(Debug, Serialize)]
struct SegmentOut<'a> {
    label: &'a str,
    period: &'a str,
    start: YearMonth,
    end: YearMonth,
    months: usize,
    mean: f64,
    plot_file: String,
    #[serde(flatten)]
    classification: ClassificationOut,
    bins: Bins<'a>,
}

#[derive(Debug, Serialize)]
struct SegmentError {
    label: String,
    error: String,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
enum SegmentEntry<'a> {
    Ok(SegmentOut<'a>),
    Failed(SegmentError),
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    schema: u32,
    kind: &'static str,
    source: String,
    segments: Vec<SegmentEntry<'a>>,
}

pub fn report(args: &ReportArgs) -> Outcome {
    let config = AnalysisConfig {
        binning: binning(&args.binning)?,
        mode: args.binning.mode.into(),
        classify: classify_config(&args.classify)?,
        min_months: args.min_months,
    };
    if let Some(us) = &args.source.us {
        let path = us
            .clone()
            .unwrap_or_else(|| data_dir().join("us/us_shiller_format.csv"));
        report_us(args, &path, &config)
    } else {
        let dir = args
            .source
            .countries
            .clone()
            .flatten()
            .unwrap_or_else(|| data_dir().join("countries"));
        report_countries(args, &dir, &config)
    }
}

fn report_us(args: &ReportArgs, path: &Path, config: &AnalysisConfig) -> Outcome {
    if args.window == 0 {
        return Err(Failure::config(anyhow!("--window must be at least 1")));
    }
    let periods = if args.periods.is_empty() {
        default_us_periods()
    } else {
        args.periods
            .iter()
            .map(|p| parse_period(p))
            .collect::<Outcome<Vec<_>>>()?
    };
    let mut run = Run::new("report", &args.out_dir)?;
    let bytes = run.input(path)?;
    let raw = read_price_csv(bytes.as_slice(), &PriceColumns::default(), "us")?;
    let cape = compute_cape(
        &real_adjust_latest(&raw)?,
        CapeOptions {
            window_months: args.window,
            ..CapeOptions::default()
        },
    )?
    .series;
    let results = per_period_analysis(&cape, &periods, config)?;
    let named: Vec<(String, Result<SegmentReport, String>)> = periods
        .iter()
        .zip(results)
        .map(|(p, r)| {
            (
                format!("us_{}", slug(&p.label)),
                r.map_err(|e| e.to_string()),
            )
        })
        .collect();
    write_report(run, args, "us", "periods", path, &named)
}

fn report_countries(args: &ReportArgs, dir: &Path, config: &AnalysisConfig) -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::data(AnalysisError::EmptyBatch).with_note(dir));
    }
    let mut run = Run::new("report", &args.out_dir)?;
    let mut series = Vec::new();
    let mut failed = Vec::new();
    for f in &files {
        let bytes = run.input(f)?;
        let label = label_from_path(f);
        match read_cape_csv(bytes.as_slice(), &CapeColumns::default(), &label) {
            Ok(s) => series.push(s),
            Err(e) => failed.push((label, e)),
        }
    }
    let mut named: Vec<(String, Result<SegmentReport, String>)> = Vec::new();
    if !series.is_empty() {
        for (label, r) in multi_country_analysis(&series, config)? {
            named.push((slug(&label), r.map_err(|e| e.to_string())));
        }
    }
    for (label, e) in failed {
        named.push((slug(&label), Err(format!("{label}: {e}"))));
    }
    named.sort_by(|a, b| a.0.cmp(&b.0));
    write_report(run, args, "countries", "countries", dir, &named)
}

impl Failure {
    fn with_note(mut self, dir: &Path) -> Self {
        self.error = self
            .error
            .context(format!("no CSV files in {}", dir.display()));
        self
    }
}

fn write_report(
    mut run: Run,
    args: &ReportArgs,
    stem: &str,
    kind: &'static str,
    source: &Path,
    named: &[(String, Result<SegmentReport, String>)],
) -> Outcome {
    let mut segments = Vec::new();
    let mut ok = 0;
    for (file_stem, result) in named {
        match result {
            Ok(r) => {
                let plot_file = format!("{file_stem}.txt");
                run.write(&plot_file, plot_text(&r.potential).as_bytes())?;
                segments.push(SegmentEntry::Ok(SegmentOut {
                    label: &r.label,
                    period: &r.period,
                    start: r.start,
                    end: r.end,
                    months: r.months,
                    mean: r.mean,
                    plot_file,
                    classification: ClassificationOut::from(&r.classification),
                    bins: Bins {
                        midpoints: &r.potential.midpoints,
                        counts: &r.potential.counts,
                        potential: &r.potential.potential,
                    },
                }));
                let name = if r.period.is_empty() {
                    &r.label
                } else {
                    &r.period
                };
                println!("{name}: {:?}", r.classification.verdict);
                ok += 1;
            }
            Err(e) => {
                eprintln!("warning: {file_stem}: {e}");
                segments.push(SegmentEntry::Failed(SegmentError {
                    label: file_stem.clone(),
                    error: e.clone(),
                }));
            }
        }
    }
    let summary = format!("{stem}_report");
    run.write_json(
        &format!("{summary}.json"),
        &ReportFile {
            schema: SCHEMA_VERSION,
            kind,
            source: source.display().to_string(),
            segments,
        },
    )?;
    run.finish(&summary, args)?;
    println!(
        "{ok} of {} analyzed; summary in {summary}.json",
        named.len()
    );
    Ok(())
}
