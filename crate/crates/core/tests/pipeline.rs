//! End-to-end runs through ingestion, cleansing and the analysis battery.

use chrono::{TimeZone, Utc};
use windscale::analysis::{acf_with_band, increment_moments, pdf_histogram, qq_pairs, spectrum, window_mass};
use windscale::cleansing::{cleanse, CleansingConfig};
use windscale::dfa::{default_scales, fit_crossover, fluctuation};
use windscale::io::{export_to_string, ingest_reader};
use windscale::model::{simulate, ModelParams};
use windscale::series::{increments, standardize};

fn simulated_series() -> windscale::TurbineSeries {
    let mut p = ModelParams::table1(0.9).unwrap().with_seed(31);
    p.t_start = Utc.with_ymd_and_hms(2014, 3, 1, 0, 0, 0).unwrap();
    simulate(&p, 3 * 4320).unwrap().to_turbine_series("WT01")
}

#[test]
fn simulate_export_ingest_analyze() {
    let s = simulated_series();
    let back = ingest_reader(export_to_string([&s]).unwrap().as_bytes()).unwrap();
    let s2 = &back.series["WT01"];
    assert_eq!(s2, &s);

    // No min/max/std channels: only the rules that can run are applied.
    let (clean, report) = cleanse(s2, &CleansingConfig::default()).unwrap();
    assert_eq!(report.skipped_rules.len(), 3);
    assert_eq!(clean, s);

    let v = clean.power_avg();
    let h = pdf_histogram(v, 100).unwrap();
    let mass: f64 = h.density.iter().zip(h.bin_edges.windows(2)).map(|(d, e)| d * (e[1] - e[0])).sum();
    assert!((mass - 1.0).abs() < 1e-9);
    assert!((0.0..=1.0).contains(&window_mass(v, &[(50.0, 200.0), (3550.0, 3800.0)])));

    let acf = acf_with_band(v, 1008, 10, 1).unwrap();
    assert_eq!(acf.theta[0], Some(1.0));
    assert!(acf.theta[1].unwrap() > acf.band_halfwidth.unwrap());

    let spec = spectrum(v, 3, (1.0 / 864_000.0, 1.0 / 21_600.0)).unwrap();
    assert!(spec.beta > 1.0 && spec.beta < 2.5, "{}", spec.beta);

    let inc = standardize(&increments(&clean, 600).unwrap()).unwrap();
    let m = increment_moments(&inc).unwrap();
    assert!(m.excess_kurtosis > 1.0);

    let curve = fluctuation(v, &default_scales(v.len()), 2).unwrap();
    let fit = fit_crossover(&curve).unwrap();
    assert!(fit.alpha.is_finite());

    let qq = qq_pairs(v, v, 50).unwrap();
    assert!(qq.iter().all(|(a, b)| a == b));
}

#[test]
fn cleansing_removes_injected_artifacts() {
    let n = 500;
    let avg: Vec<Option<f64>> = (0..n).map(|i| Some(1500.0 + 300.0 * (i as f64 / 40.0).sin())).collect();
    let lo: Vec<Option<f64>> = avg.iter().map(|v| v.map(|x| x - 40.0)).collect();
    let hi: Vec<Option<f64>> = avg.iter().map(|v| v.map(|x| x + 40.0)).collect();
    let mut sd: Vec<Option<f64>> = vec![Some(12.0); n];
    sd[100] = Some(0.0);
    sd[300] = Some(0.0);
    let t0 = Utc.with_ymd_and_hms(2014, 6, 1, 0, 0, 0).unwrap();
    let s = windscale::TurbineSeries::new("T", t0, avg, Some(lo), Some(hi), Some(sd), None).unwrap();
    let (clean, r) = cleanse(&s, &CleansingConfig::default()).unwrap();
    assert_eq!(r.counts.zero_std, 2);
    assert_eq!(r.counts.total(), 2);
    assert!(clean.power_avg()[100].is_none() && clean.power_min().unwrap()[100].is_none());
    assert!((r.na_fraction_after - 2.0 / n as f64).abs() < 1e-12);
}
