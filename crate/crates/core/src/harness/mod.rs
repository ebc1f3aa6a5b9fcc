//! Named verification suites and their reports.
//!
//! Every suite is deterministic given [`RunConfig::seed`]: each check group
//! derives its own seed from the global one and a fixed label, replicas use
//! per-index streams, and checks are sorted by name before reporting.

mod exact;
pub mod golden;
mod mc;
mod net;

use crate::stats::{ks_critical_1pct, ks_statistic, Estimate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error("unknown report format {0:?}")]
    UnknownFormat(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("suite {suite} failed to run: {msg}")]
    Run { suite: String, msg: String },
    #[error("malformed golden line {line}: {msg}")]
    Golden { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteId {
    AppendixGolden,
    PnuProperties,
    HalflineIso,
    StationaryIso,
    ChiTilt,
    NetworkN2,
}

impl SuiteId {
    pub const ALL: [SuiteId; 6] = [
        SuiteId::AppendixGolden,
        SuiteId::PnuProperties,
        SuiteId::HalflineIso,
        SuiteId::StationaryIso,
        SuiteId::ChiTilt,
        SuiteId::NetworkN2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SuiteId::AppendixGolden => "appendix-golden",
            SuiteId::PnuProperties => "pnu-properties",
            SuiteId::HalflineIso => "halfline-iso",
            SuiteId::StationaryIso => "stationary-iso",
            SuiteId::ChiTilt => "chi-tilt",
            SuiteId::NetworkN2 => "network-n2",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse_selection(s: &str) -> Result<Vec<SuiteId>, HarnessError> {
        if s == "all" {
            return Ok(Self::ALL.to_vec());
        }
        Ok(vec![s.parse()?])
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| HarnessError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" => Ok(ReportFormat::Text),
            _ => Err(HarnessError::UnknownFormat(s.to_string())),
        }
    }
}

/// Default bound on `|z|` for Monte Carlo checks.
pub const DEFAULT_Z_BOUND: f64 = 4.0;
/// Default number of Monte Carlo paths or field samples per check group.
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Paths or field samples per Monte Carlo group.
    pub samples: usize,
    /// Time step; `None` uses the engine default.
    pub dt: Option<f64>,
    pub z_bound: f64,
    /// Per-check `|z|` bounds keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    pub suites: Vec<SuiteId>,
    pub output: Option<std::path::PathBuf>,
    pub format: ReportFormat,
    /// Record wall-clock times in the report.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            samples: DEFAULT_SAMPLES,
            dt: None,
            z_bound: DEFAULT_Z_BOUND,
            tolerances: BTreeMap::new(),
            suites: SuiteId::ALL.to_vec(),
            output: None,
            format: ReportFormat::Json,
            timing: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples < 2 {
            return Err(HarnessError::Config(format!("need at least 2 samples, got {}", self.samples)));
        }
        if self.z_bound.is_nan() || self.z_bound <= 0.0 {
            return Err(HarnessError::Config(format!("z bound must be positive, got {}", self.z_bound)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(HarnessError::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if let Some((name, b)) = self.tolerances.iter().find(|(_, b)| b.is_nan() || **b <= 0.0) {
            return Err(HarnessError::Config(format!("tolerance for {name} must be positive, got {b}")));
        }
        Ok(())
    }

    pub fn bound_for(&self, check: &str) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(self.z_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Exact symbolic or rational comparison.
    Exact,
    /// Monte Carlo estimate against an exact value.
    ZScore,
    /// Two independent Monte Carlo estimates against each other.
    TwoSample,
    /// One-sample Kolmogorov-Smirnov test at the 1% level.
    Ks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// Label of the check group; its members share a seed and a wall time.
    pub group: String,
    /// The identity under test.
    pub identity: String,
    pub kind: CheckKind,
    pub exact: Option<f64>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    /// `z` for Monte Carlo checks, `D_N` for KS checks.
    pub statistic: Option<f64>,
    /// Pass threshold for `statistic`.
    pub bound: Option<f64>,
    pub samples: usize,
    pub passed: bool,
    pub seed: u64,
    pub wall_ms: Option<u64>,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub wall_ms: Option<u64>,
    pub checks: Vec<CheckRecord>,
}

impl SuiteReport {
    pub fn empty(suite: &str, seed: u64) -> Self {
        SuiteReport { suite: suite.to_string(), seed, passed: true, wall_ms: None, checks: Vec::new() }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Copy with all wall-clock fields cleared.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.wall_ms = None;
        r.checks.iter_mut().for_each(|c| c.wall_ms = None);
        r
    }
}

/// Reports of several suites, in selection order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(seed: u64, suites: Vec<SuiteReport>) -> Self {
        Report { seed, passed: suites.iter().all(|s| s.passed), suites }
    }

    pub fn without_timing(&self) -> Self {
        Report { suites: self.suites.iter().map(SuiteReport::without_timing).collect(), ..self.clone() }
    }

    pub fn checks(&self) -> impl Iterator<Item = (&str, &CheckRecord)> {
        self.suites.iter().flat_map(|s| s.checks.iter().map(move |c| (s.suite.as_str(), c)))
    }
}

/// Collects the checks of one group, stamping seed and timing.
pub(crate) struct Group<'a> {
    cfg: &'a RunConfig,
    label: String,
    seed: u64,
    start: Instant,
    records: Vec<CheckRecord>,
}

impl<'a> Group<'a> {
    pub(crate) fn new(cfg: &'a RunConfig, label: &str) -> Self {
        Group { cfg, label: label.to_string(), seed: crate::rng::derive_seed(cfg.seed, label), start: Instant::now(), records: Vec::new() }
    }

    pub(crate) fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn samples(&self) -> usize {
        self.cfg.samples
    }

    fn push(&mut self, mut rec: CheckRecord) {
        rec.seed = self.seed;
        rec.group.clone_from(&self.label);
        self.records.push(rec);
    }

    fn base(name: String, identity: &str, kind: CheckKind) -> CheckRecord {
        CheckRecord {
            name,
            group: String::new(),
            identity: identity.to_string(),
            kind,
            exact: None,
            estimate: None,
            stderr: None,
            statistic: None,
            bound: None,
            samples: 0,
            passed: false,
            seed: 0,
            wall_ms: None,
            detail: None,
        }
    }

    pub(crate) fn exact(&mut self, name: impl Into<String>, identity: &str, ok: bool, detail: Option<String>) {
        let mut rec = Self::base(name.into(), identity, CheckKind::Exact);
        rec.passed = ok;
        rec.detail = detail;
        self.push(rec);
    }

    pub(crate) fn z(&mut self, name: impl Into<String>, identity: &str, est: Estimate, exact: f64) {
        let name = name.into();
        let bound = self.cfg.bound_for(&name);
        let z = est.z_score(exact);
        let mut rec = Self::base(name, identity, CheckKind::ZScore);
        rec.exact = Some(exact);
        rec.estimate = Some(est.value);
        rec.stderr = Some(est.stderr);
        rec.statistic = Some(z);
        rec.bound = Some(bound);
        rec.samples = est.samples;
        rec.passed = z.abs() <= bound;
        self.push(rec);
    }

    pub(crate) fn two_sample(&mut self, name: impl Into<String>, identity: &str, a: Estimate, b: Estimate) {
        let name = name.into();
        let bound = self.cfg.bound_for(&name);
        let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        let z = crate::stats::z_score(a.value, b.value, se);
        let mut rec = Self::base(name, identity, CheckKind::TwoSample);
        rec.exact = Some(b.value);
        rec.estimate = Some(a.value);
        rec.stderr = Some(se);
        rec.statistic = Some(z);
        rec.bound = Some(bound);
        rec.samples = a.samples.min(b.samples);
        rec.passed = z.abs() <= bound;
        self.push(rec);
    }

    pub(crate) fn ks(&mut self, name: impl Into<String>, identity: &str, samples: &[f64], cdf: impl Fn(f64) -> f64) {
        let d = ks_statistic(samples, cdf);
        let crit = ks_critical_1pct(samples.len());
        let mut rec = Self::base(name.into(), identity, CheckKind::Ks);
        rec.statistic = Some(d);
        rec.bound = Some(crit);
        rec.samples = samples.len();
        rec.passed = d < crit;
        self.push(rec);
    }

    pub(crate) fn fail(&mut self, name: impl Into<String>, identity: &str, msg: String) {
        self.exact(name, identity, false, Some(msg));
    }

    pub(crate) fn finish(mut self) -> Vec<CheckRecord> {
        if self.cfg.timing {
            let ms = self.start.elapsed().as_millis() as u64;
            self.records.iter_mut().for_each(|r| r.wall_ms = Some(ms));
        }
        self.records
    }
}

pub fn run_suite(id: SuiteId, cfg: &RunConfig) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let run_err = |msg: String| HarnessError::Run { suite: id.name().to_string(), msg };
    let mut checks = match id {
        SuiteId::AppendixGolden => exact::appendix_golden(cfg)?,
        SuiteId::PnuProperties => exact::pnu_properties(cfg).map_err(run_err)?,
        SuiteId::HalflineIso => mc::halfline_iso(cfg).map_err(run_err)?,
        SuiteId::StationaryIso => mc::stationary_iso(cfg).map_err(run_err)?,
        SuiteId::ChiTilt => mc::chi_tilt(cfg).map_err(run_err)?,
        SuiteId::NetworkN2 => net::network_n2(cfg).map_err(run_err)?,
    };
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().all(|c| c.passed);
    let wall_ms = cfg.timing.then(|| start.elapsed().as_millis() as u64);
    Ok(SuiteReport { suite: id.name().to_string(), seed: cfg.seed, passed, wall_ms, checks })
}

/// Runs the network checks on a caller-supplied graph.
pub fn verify_network(net: &crate::network::Network, cfg: &RunConfig) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut checks = net::network_checks(cfg, "input", net)
        .map_err(|msg| HarnessError::Run { suite: "network".into(), msg })?;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let passed = checks.iter().all(|c| c.passed);
    let wall_ms = cfg.timing.then(|| start.elapsed().as_millis() as u64);
    Ok(SuiteReport { suite: "network".into(), seed: cfg.seed, passed, wall_ms, checks })
}

/// Runs every suite selected in `cfg`.
pub fn run(cfg: &RunConfig) -> Result<Report, HarnessError> {
    let suites = cfg.suites.iter().map(|&id| run_suite(id, cfg)).collect::<Result<Vec<_>, _>>()?;
    Ok(Report::new(cfg.seed, suites))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    name: &'a str,
    group: &'a str,
    identity: &'a str,
    kind: CheckKind,
    exact: Option<f64>,
    estimate: Option<f64>,
    stderr: Option<f64>,
    statistic: Option<f64>,
    bound: Option<f64>,
    samples: usize,
    passed: bool,
    seed: u64,
    wall_ms: Option<u64>,
    detail: Option<&'a str>,
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for (suite, c) in report.checks() {
                w.serialize(CsvRow {
                    suite,
                    name: &c.name,
                    group: &c.group,
                    identity: &c.identity,
                    kind: c.kind,
                    exact: c.exact,
                    estimate: c.estimate,
                    stderr: c.stderr,
                    statistic: c.statistic,
                    bound: c.bound,
                    samples: c.samples,
                    passed: c.passed,
                    seed: c.seed,
                    wall_ms: c.wall_ms,
                    detail: c.detail.as_deref(),
                })?;
            }
            w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))
        }
        ReportFormat::Text => {
            let mut s = String::new();
            for suite in &report.suites {
                let fails = suite.failures().count();
                s += &format!(
                    "suite {}: {} ({} checks, {} failed)\n",
                    suite.suite,
                    if suite.passed { "PASS" } else { "FAIL" },
                    suite.checks.len(),
                    fails
                );
                for c in &suite.checks {
                    s += &format!("  {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
                    if let (Some(st), Some(b)) = (c.statistic, c.bound) {
                        s += &format!("  stat={st:.4} bound={b:.4}");
                    }
                    if let (Some(e), Some(x)) = (c.estimate, c.exact) {
                        s += &format!("  est={e:.6} ref={x:.6}");
                    }
                    if let Some(d) = &c.detail {
                        s += &format!("  [{d}]");
                    }
                    s.push('\n');
                }
            }
            Ok(s.into_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for id in SuiteId::ALL {
            assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
        }
        assert_eq!(SuiteId::parse_selection("all").unwrap().len(), 6);
        assert!(matches!("bogus".parse::<SuiteId>(), Err(HarnessError::UnknownSuite(_))));
    }

    #[test]
    fn empty_report_emits() {
        let r = Report::new(3, vec![SuiteReport::empty("appendix-golden", 3)]);
        let json = emit_report(&r, ReportFormat::Json).unwrap();
        let back: Report = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, r);
        let csv = String::from_utf8(emit_report(&r, ReportFormat::Csv).unwrap()).unwrap();
        assert!(csv.is_empty());
    }

    #[test]
    fn config_json_mirrors_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"seed": 9, "suites": ["chi-tilt"]}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.samples, DEFAULT_SAMPLES);
        assert_eq!(cfg.suites, vec![SuiteId::ChiTilt]);
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 9}"#).is_err());
    }
}
