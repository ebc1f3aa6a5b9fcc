//! Acceptance criteria at full scale: seed 7 and 100 000 samples per Monte
//! Carlo group. Each test writes one PASS/FAIL line to stderr, bypassing
//! output capture, and then asserts.
//!
//! Runtime limits apply to the summed wall time of the check groups that
//! produce a criterion's checks; groups shared by two criteria count toward
//! both. The tests hold a common lock so that no run is timed while another
//! competes for the CPU.

use dyson_iso::harness::{emit_report, run, run_suite, CheckRecord, Report, ReportFormat, RunConfig, SuiteId};
use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

const SEED: u64 = 7;
const SAMPLES: usize = 100_000;
/// Bound on `|z|` for every Monte Carlo comparison.
const Z_BOUND: f64 = 4.0;

fn config(timing: bool) -> RunConfig {
    RunConfig { seed: SEED, samples: SAMPLES, z_bound: Z_BOUND, timing, ..RunConfig::default() }
}

fn exclusive() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn full_report() -> &'static Report {
    static REPORT: OnceLock<Report> = OnceLock::new();
    REPORT.get_or_init(|| run(&config(true)).expect("suites run"))
}

fn checks(report: &Report, keep: impl Fn(&str, &CheckRecord) -> bool) -> Vec<&CheckRecord> {
    report.checks().filter(|(suite, c)| keep(suite, c)).map(|(_, c)| c).collect()
}

/// Summed wall time of the distinct groups behind `selected`.
fn group_time(selected: &[&CheckRecord]) -> Duration {
    let groups: BTreeMap<&str, u64> = selected.iter().map(|c| (c.group.as_str(), c.wall_ms.unwrap_or(0))).collect();
    Duration::from_millis(groups.values().sum())
}

fn verdict(label: &str, selected: &[&CheckRecord], elapsed: Duration, limit: Duration) -> bool {
    let failed: Vec<&&CheckRecord> = selected.iter().filter(|c| !c.passed).collect();
    let worst = selected
        .iter()
        .filter_map(|c| Some((c.statistic? / c.bound?, c.name.as_str())))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    let ok = !selected.is_empty() && failed.is_empty() && elapsed < limit;
    let mut line = format!(
        "[{}] {label}: {}/{} checks passed, {:.1} s (limit {} s)",
        if ok { "PASS" } else { "FAIL" },
        selected.len() - failed.len(),
        selected.len(),
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    if let Some((ratio, name)) = worst {
        line += &format!(", worst statistic/bound {ratio:.2} at {name:?}");
    }
    for c in failed.iter().take(5) {
        line += &format!("\n    failed: {} stat={:?} bound={:?} {}", c.name, c.statistic, c.bound, c.detail.as_deref().unwrap_or(""));
    }
    writeln!(std::io::stderr(), "{line}").ok();
    ok
}

fn timed_suite(id: SuiteId) -> (Vec<CheckRecord>, Duration) {
    let start = Instant::now();
    let report = run_suite(id, &config(true)).expect("suite runs");
    (report.checks, start.elapsed())
}

#[test]
fn appendix_table() {
    let _guard = exclusive();
    let (checks, elapsed) = timed_suite(SuiteId::AppendixGolden);
    let selected: Vec<&CheckRecord> = checks.iter().collect();
    assert_eq!(selected.len(), 19, "every appendix line is compared");
    assert!(verdict("appendix table, exact", &selected, elapsed, Duration::from_secs(1)));
}

#[test]
fn structural_identities() {
    let _guard = exclusive();
    let (checks, elapsed) = timed_suite(SuiteId::PnuProperties);
    let selected: Vec<&CheckRecord> = checks.iter().collect();
    assert!(verdict("structural identities up to |nu| = 8, exact", &selected, elapsed, Duration::from_secs(120)));
}

#[test]
fn bessel_occupation() {
    let _guard = exclusive();
    let report = full_report();
    let selected = checks(report, |_, c| c.group.starts_with("besq "));
    for needle in ["marginal", "moment", "gaussian square"] {
        assert!(selected.iter().any(|c| c.name.contains(needle)), "missing {needle} checks");
    }
    let elapsed = group_time(&selected);
    assert!(verdict("squared Bessel occupation, KS 1% and |z| <= 4", &selected, elapsed, Duration::from_secs(300)));
}

#[test]
fn dyson_moments() {
    let _guard = exclusive();
    let report = full_report();
    let selected = checks(report, |_, c| {
        c.name.starts_with("halfline ") || c.name.starts_with("stationary ") || c.name.starts_with("stationarity ")
    });
    for case in ["n=2 beta=0", "n=2 beta=1", "n=2 beta=2.5", "n=2 beta=-0.5", "n=3 beta=0", "n=3 beta=1", "n=3 beta=2.5"] {
        for kind in ["halfline", "stationary"] {
            assert!(
                selected.iter().any(|c| c.name.starts_with(&format!("{kind} {case} "))),
                "missing {kind} moments for {case}"
            );
        }
    }
    let elapsed = group_time(&selected);
    assert!(verdict("Dyson moments, |z| <= 4", &selected, elapsed, Duration::from_secs(1200)));
}

#[test]
fn exponential_functional() {
    let _guard = exclusive();
    let report = full_report();
    let selected = checks(report, |_, c| c.name.starts_with("dynkin ") || c.name.contains(" dynkin "));
    assert!(selected.iter().any(|c| c.name.starts_with("dynkin ")), "missing half-line checks");
    assert!(selected.iter().any(|c| c.name.starts_with("lambda ")), "missing network checks");
    let elapsed = group_time(&selected);
    assert!(verdict("exponential functional identity, |z| <= 4", &selected, elapsed, Duration::from_secs(600)));
}

#[test]
fn network_fields() {
    let _guard = exclusive();
    let report = full_report();
    let selected = checks(report, |suite, _| suite == SuiteId::NetworkN2.name());
    for needle in ["one-point", "two-point dyson", "moment nu=", "dynkin", "matrix field", "reweight", "laplace", "C4"] {
        assert!(selected.iter().any(|c| c.name.contains(needle)), "missing {needle} checks");
    }
    let elapsed = group_time(&selected);
    assert!(verdict("network fields on |V| = 1, 2, 4, |z| <= 4", &selected, elapsed, Duration::from_secs(900)));
}

#[test]
fn reproducibility() {
    let _guard = exclusive();
    let first = emit_report(&full_report().without_timing(), ReportFormat::Json).unwrap();
    let second = emit_report(&run(&config(false)).expect("suites run"), ReportFormat::Json).unwrap();
    let ok = first == second;
    writeln!(
        std::io::stderr(),
        "[{}] reproducibility: two runs at seed {SEED} give {} JSON reports ({} bytes)",
        if ok { "PASS" } else { "FAIL" },
        if ok { "byte-identical" } else { "different" },
        first.len()
    )
    .ok();
    assert!(ok);
}
