use dyson_iso::harness::{emit_report, run, run_suite, HarnessError, Report, ReportFormat, RunConfig, SuiteId, SuiteReport};
use dyson_iso::rng;
use dyson_iso::stats::{ks_critical_1pct, ks_statistic, mean_estimate};
use rand_distr::StandardNormal;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn small(suites: &[SuiteId], seed: u64) -> RunConfig {
    RunConfig { seed, samples: 2000, suites: suites.to_vec(), timing: false, ..RunConfig::default() }
}

#[test]
fn network_suite_is_reproducible() {
    let cfg = small(&[SuiteId::NetworkN2], 11);
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    assert_eq!(emit_report(&a, ReportFormat::Json).unwrap(), emit_report(&b, ReportFormat::Json).unwrap());
    let other = run(&small(&[SuiteId::NetworkN2], 12)).unwrap();
    assert_ne!(a, other);
}

#[test]
fn checks_are_sorted_and_named_uniquely() {
    let report = run_suite(SuiteId::NetworkN2, &small(&[], 3)).unwrap();
    let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
    assert!(names.windows(2).all(|w| w[0] < w[1]), "duplicate or unsorted check names");
}

#[test]
fn serializations_agree_with_the_report() {
    let report = run(&small(&[SuiteId::AppendixGolden, SuiteId::NetworkN2], 5)).unwrap();
    let json = emit_report(&report, ReportFormat::Json).unwrap();
    let back: Report = serde_json::from_slice(&json).unwrap();
    assert_eq!(back, report);

    let csv = emit_report(&report, ReportFormat::Csv).unwrap();
    let rows = csv::Reader::from_reader(csv.as_slice()).records().count();
    assert_eq!(rows, report.checks().count());

    let text = String::from_utf8(emit_report(&report, ReportFormat::Text).unwrap()).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("suite ")).count(), 2);
}

#[test]
fn empty_report_is_valid() {
    let report = Report::new(9, vec![SuiteReport::empty("none", 9)]);
    assert!(report.passed);
    let json = emit_report(&report, ReportFormat::Json).unwrap();
    assert_eq!(serde_json::from_slice::<Report>(&json).unwrap(), report);
    let csv = emit_report(&report, ReportFormat::Csv).unwrap();
    assert_eq!(csv::Reader::from_reader(csv.as_slice()).records().count(), 0);
}

#[test]
fn appendix_is_seed_independent() {
    let a = run_suite(SuiteId::AppendixGolden, &small(&[], 1)).unwrap();
    let b = run_suite(SuiteId::AppendixGolden, &small(&[], 99)).unwrap();
    assert!(a.passed && b.passed);
    assert_eq!(a.checks.len(), b.checks.len());
}

#[test]
fn bad_configuration_is_rejected() {
    assert!(matches!(SuiteId::parse_selection("bogus"), Err(HarnessError::UnknownSuite(_))));
    assert!(matches!("xml".parse::<ReportFormat>(), Err(HarnessError::UnknownFormat(_))));
    assert!(serde_json::from_str::<RunConfig>(r#"{"seeed": 3}"#).is_err());
    let cfg = RunConfig { samples: 1, ..RunConfig::default() };
    assert!(matches!(run_suite(SuiteId::AppendixGolden, &cfg), Err(HarnessError::Config(_))));
    let cfg = RunConfig { dt: Some(-1.0), ..RunConfig::default() };
    assert!(cfg.validate().is_err());
}

#[test]
fn config_file_fields_have_defaults() {
    let cfg: RunConfig = serde_json::from_str(r#"{"seed": 7, "suites": ["chi-tilt"], "tolerances": {"x": 5.0}}"#).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.suites, vec![SuiteId::ChiTilt]);
    assert_eq!(cfg.samples, RunConfig::default().samples);
    assert_eq!(cfg.bound_for("x"), 5.0);
    assert_eq!(cfg.bound_for("y"), cfg.z_bound);
}

/// A null check compares an estimator with its own exact value; across
/// seeds its z-scores must look standard normal.
#[test]
fn null_z_scores_are_standard_normal() {
    let z: Vec<f64> = (0..100u64)
        .map(|seed| {
            let xs: Vec<f64> = rng::replicas(seed, 2000, |r| {
                let g: f64 = r.sample(StandardNormal);
                g * g
            });
            mean_estimate(&xs).z_score(1.0)
        })
        .collect();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let d = ks_statistic(&z, |x| normal.cdf(x));
    assert!(d < ks_critical_1pct(z.len()), "KS {d}");
}
