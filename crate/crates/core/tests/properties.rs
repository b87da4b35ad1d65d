//! Property tests over randomly generated inputs.

use potlab_core::ingest::write_price_csv;
use potlab_core::models::fit_points;
use potlab_core::{
    classify, compute_cape, deviations, discrete_gibbs, estimate_potential, gibbs_density,
    read_price_csv, real_adjust, thermo, BinningConfig, CapeOptions, CapeSeries, ClassifyConfig,
    Domain, Family, MonthlyRecord, PotentialSpec, PriceColumns, RawSeries, YearMonth,
};
use proptest::prelude::*;

fn raw_series() -> impl Strategy<Value = RawSeries> {
    (1850i32..2020, 1u32..=12, 13usize..40).prop_flat_map(|(y, m, n)| {
        (
            Just(YearMonth::new(y, m).unwrap()),
            prop::collection::vec((1.0f64..500.0, 0.1f64..30.0, 5.0f64..300.0), n),
        )
            .prop_map(|(start, rows)| {
                let records = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (p, e, c))| MonthlyRecord {
                        date: start.add_months(i as i64),
                        price: p,
                        earnings: Some(e),
                        cpi: Some(c),
                    })
                    .collect();
                RawSeries::new("P", records).unwrap()
            })
    })
}

fn cape_series() -> impl Strategy<Value = CapeSeries> {
    prop::collection::vec(1.0f64..60.0, 10..300).prop_map(|v| {
        let start = YearMonth::new(1950, 1).unwrap();
        let dates = (0..v.len()).map(|i| start.add_months(i as i64)).collect();
        CapeSeries::new("S", dates, v).unwrap()
    })
}

fn scaled(series: &RawSeries, k: f64) -> RawSeries {
    let records = series
        .records()
        .iter()
        .map(|r| MonthlyRecord {
            price: r.price * k,
            earnings: r.earnings.map(|e| e * k),
            ..*r
        })
        .collect();
    RawSeries::new(series.label(), records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn month_text_round_trip(y in 1i32..9999, m in 1u32..=12) {
        let ym = YearMonth::new(y, m).unwrap();
        prop_assert_eq!(YearMonth::parse(&ym.to_string()).unwrap(), ym);
    }

    #[test]
    fn csv_round_trip(series in raw_series()) {
        let mut buf = Vec::new();
        write_price_csv(&series, &mut buf).unwrap();
        let back = read_price_csv(buf.as_slice(), &PriceColumns::default(), "P").unwrap();
        prop_assert_eq!(back, series);
    }

    #[test]
    fn cape_ignores_units(series in raw_series(), k in 0.01f64..100.0, window in 1usize..12) {
        let opts = CapeOptions { window_months: window, ..CapeOptions::default() };
        let last = series.last_date();
        let base = compute_cape(&real_adjust(&series, last).unwrap(), opts).unwrap().series;
        let rescaled = compute_cape(&real_adjust(&scaled(&series, k), last).unwrap(), opts).unwrap().series;
        let first = series.first_date();
        let rebased = compute_cape(&real_adjust(&series, first).unwrap(), opts).unwrap().series;
        for ((a, b), c) in base.values().iter().zip(rescaled.values()).zip(rebased.values()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            prop_assert!((a - c).abs() <= 1e-12 * a.abs());
        }
    }

    #[test]
    fn deviations_shift_with_the_series(s in cape_series(), shift in -20.0f64..20.0) {
        let moved = CapeSeries::new("S", s.dates().to_vec(), s.values().iter().map(|v| v + shift).collect()).unwrap();
        for (a, b) in deviations(&s).iter().zip(deviations(&moved)) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + s.mean().abs() + shift.abs()));
        }
    }

    #[test]
    fn counts_are_conserved(data in prop::collection::vec(-50.0f64..50.0, 2..500), n in 2usize..40) {
        prop_assume!(data.iter().any(|&d| d != data[0]));
        let ep = estimate_potential(&data, &BinningConfig::with_bins(n)).unwrap();
        prop_assert_eq!(ep.in_range_count() as usize, data.len());
        let total: f64 = ep.frequencies.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for ((c, f), phi) in ep.counts.iter().zip(&ep.frequencies).zip(&ep.potential) {
            prop_assert_eq!(*c == 0, phi.is_none());
            if let Some(p) = phi {
                prop_assert!((p + f.ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_range_counts_only_inside(data in prop::collection::vec(-50.0f64..50.0, 1..300), lo in -40.0f64..0.0, width in 1.0f64..60.0) {
        let hi = lo + width;
        let ep = estimate_potential(&data, &BinningConfig::explicit(7, lo, hi)).unwrap();
        let inside = data.iter().filter(|&&d| d >= lo && d <= hi).count();
        prop_assert_eq!(ep.in_range_count() as usize, inside);
        prop_assert_eq!(ep.sample_count, data.len());
    }

    #[test]
    fn gibbs_density_is_normalized(c in 0.05f64..5.0, beta in 0.05f64..20.0, family in 0usize..3) {
        let d = Domain::symmetric(10.0).unwrap();
        let phi = match family {
            0 => PotentialSpec::quadratic(c, d),
            1 => PotentialSpec::linear(c, d),
            _ => PotentialSpec::log_regularized(c, 0.01, d),
        }.unwrap();
        let g = gibbs_density(&phi, beta).unwrap();
        prop_assert!((g.total_mass().unwrap() - 1.0).abs() < 1e-8);
        let s = thermo(&phi, beta).unwrap();
        prop_assert!(s.entropy_identity_gap() < 1e-8 * (1.0 + s.entropy.abs()));
    }

    #[test]
    fn energy_falls_as_beta_rises(c in 0.1f64..3.0, beta in 0.05f64..10.0) {
        let phi = PotentialSpec::linear(c, Domain::symmetric(10.0).unwrap()).unwrap();
        let e1 = thermo(&phi, beta).unwrap().energy;
        let e2 = thermo(&phi, beta * 1.1).unwrap().energy;
        prop_assert!(e2 < e1);
    }

    #[test]
    fn discrete_gibbs_is_optimal(
        phi in prop::collection::vec(-3.0f64..3.0, 2..16),
        beta in 0.1f64..5.0,
        dir in prop::collection::vec(-1.0f64..1.0, 16),
        t in 0.001f64..0.5,
    ) {
        let p = discrete_gibbs(&phi, beta).unwrap();
        let objective = |q: &[f64]| -> f64 {
            q.iter().zip(&phi).map(|(qi, fi)| if *qi > 0.0 { -qi * qi.ln() - beta * qi * fi } else { 0.0 }).sum()
        };
        // move toward a random point of the simplex
        let raw: Vec<f64> = dir[..phi.len()].iter().map(|v| v.abs() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let q: Vec<f64> = p.iter().zip(&raw).map(|(pi, r)| (1.0 - t) * pi + t * r / total).collect();
        prop_assert!(objective(&q) <= objective(&p) + 1e-12);
    }

    #[test]
    fn fit_offset_invariance(
        ys in prop::collection::vec(0.0f64..10.0, 5..30),
        weights in prop::collection::vec(1.0f64..100.0, 30),
        k in -50.0f64..50.0,
    ) {
        let n = ys.len();
        let pts: Vec<_> = (0..n).map(|i| (i as f64 - n as f64 / 2.0, ys[i], weights[i])).collect();
        let moved: Vec<_> = pts.iter().map(|&(x, y, w)| (x, y + k, w)).collect();
        for family in Family::ALL {
            let a = fit_points(&pts, family, 0.5).unwrap();
            let b = fit_points(&moved, family, 0.5).unwrap();
            prop_assert!((a.slope - b.slope).abs() <= 1e-10 * (1.0 + a.slope.abs()));
            prop_assert!((a.rss - b.rss).abs() <= 1e-10 * (1.0 + a.rss));
            prop_assert!((a.aicc - b.aicc).abs() <= 1e-10 * (1.0 + a.aicc.abs()));
            prop_assert!((a.offset + k - b.offset).abs() <= 1e-9 * (1.0 + k.abs()));
        }
    }

    #[test]
    fn duplicating_samples_keeps_classification(data in prop::collection::vec(-20.0f64..20.0, 30..400)) {
        prop_assume!(data.iter().any(|&d| d != data[0]));
        let config = BinningConfig::with_bins(8);
        let ep = estimate_potential(&data, &config).unwrap();
        let doubled: Vec<f64> = data.iter().chain(&data).copied().collect();
        let ep2 = estimate_potential(&doubled, &config).unwrap();
        prop_assert_eq!(&ep.frequencies, &ep2.frequencies);
        let a = classify(&ep, &ClassifyConfig::default());
        let b = classify(&ep2, &ClassifyConfig::default());
        prop_assert_eq!(a, b);
    }
}
