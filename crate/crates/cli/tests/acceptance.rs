//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use potlab_core::{
    classify, compute_cape, discrete_gibbs, estimate_potential, fit_family, parse_cape_csv,
    parse_us_csv, real_adjust_latest, sample_stationary, solve_beta, thermo, BinningConfig,
    CapeColumns, CapeOptions, ClassifyConfig, Domain, Family, FitOptions, PotentialSpec,
    PriceColumns, SimConfig, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

const BETAS: [f64; 3] = [0.1, 1.0, 10.0];

fn grid_families() -> Vec<(&'static str, PotentialSpec)> {
    let dom = Domain::symmetric(10.0).unwrap();
    vec![
        ("quadratic", PotentialSpec::quadratic(1.0, dom).unwrap()),
        ("linear", PotentialSpec::linear(1.0, dom).unwrap()),
        (
            "log",
            PotentialSpec::log_regularized(1.0, 0.01, dom).unwrap(),
        ),
    ]
}

fn identities() -> Outcome {
    let t = Instant::now();
    let (mut gap, mut mass_err) = (0.0f64, 0.0f64);
    for (_, phi) in grid_families() {
        for beta in BETAS {
            let s = thermo(&phi, beta).unwrap();
            gap = gap.max(s.entropy_identity_gap());
            let g = potlab_core::gibbs_density(&phi, beta).unwrap();
            mass_err = mass_err.max((g.total_mass().unwrap() - 1.0).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        gap <= 1e-8 && mass_err <= 1e-8 && secs < 5.0,
        format!("max |H-(bE+lnZ)| {gap:.1e}, max |mass-1| {mass_err:.1e}, {secs:.2} s"),
    )
}

fn temperature() -> Outcome {
    let mut worst = 0.0f64;
    for (_, phi) in grid_families() {
        for beta in BETAS {
            let slope = potlab_core::dh_de_check(&phi, beta, 1e-3 * beta).unwrap();
            worst = worst.max((slope / beta - 1.0).abs());
        }
    }
    outcome(
        worst <= 1e-3,
        format!("max relative |dH/dE - b| {worst:.1e}"),
    )
}

fn closed_forms() -> Outcome {
    let q = thermo(
        &PotentialSpec::quadratic(1.0, Domain::symmetric(10.0).unwrap()).unwrap(),
        1.0,
    )
    .unwrap();
    let l = thermo(
        &PotentialSpec::linear(1.0, Domain::symmetric(20.0).unwrap()).unwrap(),
        2.0,
    )
    .unwrap();
    let errs = [
        (q.z - std::f64::consts::PI.sqrt()).abs(),
        (q.energy - 0.5).abs(),
        (l.z - 1.0).abs(),
        (l.energy - 0.5).abs(),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    outcome(worst <= 1e-8, format!("max error {worst:.1e}"))
}

fn objective(p: &[f64], phi: &[f64], beta: f64) -> f64 {
    p.iter()
        .zip(phi)
        .map(|(&pi, &f)| -pi * pi.ln() - beta * pi * f)
        .sum()
}

/// Euclidean projection onto the probability simplex.
fn project(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Projected gradient ascent with backtracking on `H - beta E`.
fn simplex_ascent(phi: &[f64], beta: f64) -> Vec<f64> {
    let n = phi.len();
    let mut p = vec![1.0 / n as f64; n];
    let mut f = objective(&p, phi, beta);
    let mut step = 1.0;
    for _ in 0..100_000 {
        let grad: Vec<f64> = p
            .iter()
            .zip(phi)
            .map(|(&pi, &fi)| -pi.ln() - 1.0 - beta * fi)
            .collect();
        loop {
            let trial: Vec<f64> = p.iter().zip(&grad).map(|(pi, g)| pi + step * g).collect();
            let q = project(&trial);
            let dist2: f64 = q.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum();
            let lin: f64 = q
                .iter()
                .zip(&p)
                .zip(&grad)
                .map(|((a, b), g)| (a - b) * g)
                .sum();
            if q.iter().all(|&x| x > 0.0) {
                let fq = objective(&q, phi, beta);
                if fq >= f + lin - dist2 / (2.0 * step) {
                    let moved = q
                        .iter()
                        .zip(&p)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    p = q;
                    f = fq;
                    step *= 1.5;
                    if moved < 1e-15 {
                        return p;
                    }
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-20 {
                return p;
            }
        }
    }
    p
}

fn discrete_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<f64> = (0..32).map(|_| rng.random_range(0.0..2.0)).collect();
        let beta = rng.random_range(0.5..3.0);
        let ascent = simplex_ascent(&phi, beta);
        let gibbs = discrete_gibbs(&phi, beta).unwrap();
        let err = ascent
            .iter()
            .zip(&gibbs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    outcome(
        worst <= 1e-6,
        format!("max-norm difference {worst:.1e} over 10 trials"),
    )
}

fn beta_inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let families = grid_families();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..20 {
        let (_, phi) = &families[rng.random_range(0..families.len())];
        let beta = 10f64.powf(rng.random_range(-1.0..1.0));
        let e = thermo(phi, beta).unwrap().energy;
        match solve_beta(phi, e) {
            Ok(s) => worst = worst.max((s.beta / beta - 1.0).abs()),
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst <= 1e-6,
        format!("max relative error {worst:.1e}, {failures} solver failures"),
    )
}

fn round_trip() -> Outcome {
    let t = Instant::now();
    let dom = Domain::symmetric(10.0).unwrap();
    let cases = [
        (
            Family::Quadratic,
            PotentialSpec::quadratic(1.0, dom).unwrap(),
            1.0,
            Verdict::Reverting,
        ),
        (
            Family::Linear,
            PotentialSpec::linear(1.0, dom).unwrap(),
            2.0,
            Verdict::ConstantForce,
        ),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (family, phi, beta, verdict) in cases {
        let mut good = 0;
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let cfg = SimConfig::new(phi.clone(), beta, 50_000, seed)
                .with_step(0.01)
                .with_thin(100);
            let x = sample_stationary(&cfg).unwrap();
            let ep = estimate_potential(&x, &BinningConfig::with_bins(25)).unwrap();
            let fit = fit_family(&ep, family, &FitOptions::default()).unwrap();
            let rel = (fit.slope / beta - 1.0).abs();
            worst = worst.max(rel);
            let c = classify(&ep, &ClassifyConfig::default()).unwrap();
            if rel <= 0.15 && c.verdict == verdict {
                good += 1;
            }
        }
        pass &= good >= 95;
        parts.push(format!(
            "{}: {good}/100 (worst slope error {:.1}%)",
            family.name(),
            100.0 * worst
        ));
    }
    let secs = t.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(pass, format!("{}, {secs:.1} s", parts.join(", ")))
}

fn cape_fixtures() -> Outcome {
    let raw = parse_us_csv(
        &data("fixtures/synthetic_130.csv"),
        &PriceColumns::default(),
    )
    .unwrap();
    let cape = compute_cape(&real_adjust_latest(&raw).unwrap(), CapeOptions::default()).unwrap();
    let want = parse_cape_csv(
        &data("fixtures/synthetic_130_expected_cape.csv"),
        &CapeColumns::default(),
    )
    .unwrap();
    let same_dates = cape.series.dates() == want.dates();
    let worst = cape
        .series
        .values()
        .iter()
        .zip(want.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let raw = parse_us_csv(&data("fixtures/constant.csv"), &PriceColumns::default()).unwrap();
    let constant = compute_cape(
        &real_adjust_latest(&raw).unwrap(),
        CapeOptions {
            window_months: 12,
            ..CapeOptions::default()
        },
    )
    .unwrap();
    let flat =
        !constant.series.is_empty() && constant.series.values().iter().all(|&v| v == 100.0 / 10.0);
    outcome(
        same_dates && worst <= 1e-10 && flat,
        format!(
            "synthetic max error {worst:.1e} over {} months, constant CAPE = P/E: {flat}",
            want.len()
        ),
    )
}

fn potlab(args: &[&str], cwd: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_potlab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn json(path: &Path) -> Option<Value> {
    serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
}

struct Seg {
    name: String,
    verdict: String,
    quadratic_slope: f64,
    plot: bool,
}

fn segments(report: &Path, dir: &Path, key: &str) -> Option<Vec<Seg>> {
    let j = json(report)?;
    j["segments"]
        .as_array()?
        .iter()
        .map(|s| {
            let fits = s["fits"].as_array()?;
            let q = fits.iter().find(|f| f["family"] == "quadratic")?;
            Some(Seg {
                name: s[key].as_str()?.to_string(),
                verdict: s["verdict"].as_str()?.to_string(),
                quadratic_slope: q["slope"].as_f64()?,
                plot: dir.join(s["plot_file"].as_str()?).is_file(),
            })
        })
        .collect()
}

fn us_reproduction() -> Outcome {
    let dir = TempDir::new().unwrap();
    let t = Instant::now();
    let ran = potlab(&["report", "--us", "--out-dir", "."], dir.path());
    let secs = t.elapsed().as_secs_f64();
    let Some(segs) = ran
        .then(|| segments(&dir.path().join("us_report.json"), dir.path(), "period"))
        .flatten()
    else {
        return outcome(false, "report did not produce four analyzed periods".into());
    };
    if segs.len() != 4 || !segs.iter().all(|s| s.plot) {
        return outcome(
            false,
            format!("{} curves written", segs.iter().filter(|s| s.plot).count()),
        );
    }
    let reverting_floor = segs[0].quadratic_slope.min(segs[2].quadratic_slope);
    let reverting = |s: &Seg| s.verdict == "reverting";
    let flat = |s: &Seg| {
        s.verdict == "trending" || (s.verdict == "ambiguous" && s.quadratic_slope < reverting_floor)
    };
    let pass = reverting(&segs[0])
        && reverting(&segs[2])
        && flat(&segs[1])
        && flat(&segs[3])
        && secs < 10.0;
    let summary: Vec<String> = segs
        .iter()
        .map(|s| {
            format!(
                "{} {} (q {:.4})",
                s.name.split(' ').next().unwrap_or(""),
                s.verdict,
                s.quadratic_slope
            )
        })
        .collect();
    outcome(pass, format!("{}, {secs:.1} s", summary.join("; ")))
}

fn country_reproduction() -> Outcome {
    let dir = TempDir::new().unwrap();
    let ran = potlab(&["report", "--countries", "--out-dir", "."], dir.path());
    let Some(segs) = ran
        .then(|| {
            segments(
                &dir.path().join("countries_report.json"),
                dir.path(),
                "label",
            )
        })
        .flatten()
    else {
        return outcome(false, "country report failed".into());
    };
    let flattest = segs
        .iter()
        .min_by(|a, b| a.quadratic_slope.partial_cmp(&b.quadratic_slope).unwrap())
        .map(|s| s.name.clone())
        .unwrap_or_default();
    let expected = ["norway", "united_kingdom", "belgium", "netherlands"];
    let mut misses = Vec::new();
    for name in expected {
        match segs.iter().find(|s| s.name == name) {
            Some(s) if s.verdict == "reverting" => {}
            Some(s) => misses.push(format!("{name} {}", s.verdict)),
            None => misses.push(format!("{name} missing")),
        }
    }
    let pass = segs.len() == 12 && flattest == "japan" && misses.is_empty();
    let detail = if misses.is_empty() {
        format!("flattest {flattest}; expected reverting countries all reverting")
    } else {
        format!("flattest {flattest}; not reverting: {}", misses.join(", "))
    };
    outcome(pass, detail)
}

fn hashes(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let bytes = fs::read(&path).unwrap();
        out.insert(
            path.file_name().unwrap().to_string_lossy().into_owned(),
            hex::encode(Sha256::digest(&bytes)),
        );
    }
    out
}

fn determinism() -> Outcome {
    let us = data("us/us_shiller_format.csv");
    let japan = data("countries/japan.csv");
    let (us, japan) = (us.to_str().unwrap(), japan.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["cape", "--input", us, "--out-dir", "out"],
        vec![
            "potential",
            "--input",
            japan,
            "--bins",
            "20",
            "--out-dir",
            "out",
        ],
        vec![
            "fit",
            "--input",
            "out/japan_potential.json",
            "--out-dir",
            "out",
        ],
        vec![
            "simulate",
            "--family",
            "log",
            "--c",
            "2",
            "--beta",
            "1",
            "--n",
            "5000",
            "--seed",
            "11",
            "--out-dir",
            "out",
        ],
        vec!["report", "--us", "--out-dir", "out"],
        vec!["report", "--countries", "--out-dir", "out"],
    ];
    let mut results = Vec::new();
    for _ in 0..2 {
        let dir = TempDir::new().unwrap();
        for args in &runs {
            if !potlab(args, dir.path()) {
                return outcome(false, format!("`potlab {}` failed", args[0]));
            }
        }
        results.push(hashes(&dir.path().join("out")));
    }
    let differing: Vec<&String> = results[0]
        .iter()
        .filter(|(k, v)| results[1].get(*k) != Some(v))
        .map(|(k, _)| k)
        .collect();
    let pass = differing.is_empty() && results[0].len() == results[1].len();
    outcome(
        pass,
        format!(
            "{} files compared, {} differ",
            results[0].len(),
            differing.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("maxent identities", identities),
        ("temperature identity", temperature),
        ("closed forms", closed_forms),
        ("discrete gibbs oracle", discrete_oracle),
        ("beta inversion", beta_inversion),
        ("pipeline round trip", round_trip),
        ("cape fixtures", cape_fixtures),
        ("us periods", us_reproduction),
        ("countries", country_reproduction),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<22} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
