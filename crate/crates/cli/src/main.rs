use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dyson_iso::algebra::{parse_rational, rational_to_f64, Rational};
use dyson_iso::gbe::{gamma_identity_check, power_sum_family, sample_gbe, sd_moment, sd_moment_eval, IndexFamily};
use dyson_iso::harness::{self, emit_report, ReportFormat, RunConfig, SuiteId};
use dyson_iso::line::{solve_chi, PiecewiseConstChi};
use dyson_iso::network::{build_green, LambdaSampler, LoopSoup, Network};
use dyson_iso::pnu::{build_pnu, eval_chi, eval_halfline, eval_halfline_exact, eval_stationary};
use dyson_iso::rng;
use dyson_iso::sde::{simulate_many, DriftScheme, SdeConfig, Variant};
use dyson_iso::stats::{mean_estimate, Estimate};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dyson-iso", version, about = "Moment polynomials and isomorphism checks for beta-Dyson processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and write a report.
    Verify(VerifyArgs),
    /// Gaussian beta ensemble moments and sampling.
    #[command(subcommand)]
    Gbe(GbeCommand),
    /// Moment polynomials.
    #[command(subcommand)]
    Pnu(PnuCommand),
    /// Dyson process simulation.
    #[command(subcommand)]
    Sde(SdeCommand),
    /// Fields on finite networks.
    #[command(subcommand)]
    Network(NetworkCommand),
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long)]
    suite: Option<String>,
    #[arg(long, env = "DYSON_ISO_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    z_bound: Option<f64>,
    /// JSON file with any `RunConfig` field; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Omit wall-clock times from the report.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Subcommand)]
enum GbeCommand {
    /// Exact moment `<p_nu>`, symbolic or at given `beta`, `n`.
    Moment {
        #[arg(long)]
        nu: IndexFamily,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long)]
        n: Option<String>,
    },
    /// Monte Carlo estimate of `<p_nu>` from the tridiagonal model.
    Sample {
        #[arg(long)]
        nu: IndexFamily,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, env = "DYSON_ISO_SEED", default_value_t = 1)]
        seed: u64,
    },
    /// Monte Carlo check of the Gamma-weighted moment identity.
    CheckGamma {
        #[arg(long)]
        nu: IndexFamily,
        #[arg(long)]
        beta: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, env = "DYSON_ISO_SEED", default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalMode {
    Halfline,
    Stationary,
    Chi,
}

#[derive(Subcommand)]
enum PnuCommand {
    /// Print `P_nu` in canonical form.
    Build {
        #[arg(long)]
        nu: IndexFamily,
    },
    /// Evaluate `P_nu` at ascending points.
    Eval {
        #[arg(long, value_enum)]
        mode: EvalMode,
        #[arg(long)]
        nu: IndexFamily,
        /// Comma-separated ascending points.
        #[arg(long)]
        points: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long)]
        n: String,
        /// Killing rate for the stationary mode.
        #[arg(long = "K")]
        k: Option<f64>,
        /// `t1:c1,t2:c2,...` for the chi mode.
        #[arg(long)]
        chi: Option<PiecewiseConstChi>,
    },
}

#[derive(Subcommand)]
enum SdeCommand {
    /// Simulate Dyson paths and summarize power-sum moments.
    Dyson {
        #[arg(long, value_enum, default_value = "halfline")]
        variant: VariantArg,
        /// Drift treatment of the particle loop.
        #[arg(long, value_enum, default_value = "heun")]
        scheme: SchemeArg,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated record points.
        #[arg(long, default_value = "1")]
        points: String,
        #[arg(long = "K")]
        k: Option<f64>,
        #[arg(long)]
        chi: Option<PiecewiseConstChi>,
        /// Power-sum orders summarized at every point.
        #[arg(long, default_value = "1,2,4")]
        orders: String,
        #[arg(long, env = "DYSON_ISO_SEED", default_value_t = 1)]
        seed: u64,
        /// Write one CSV row per path and point.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    Heun,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Halfline,
    Stationary,
    Tilted,
    N2,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Halfline => Variant::Halfline,
            VariantArg::Stationary => Variant::Stationary,
            VariantArg::Tilted => Variant::Tilted,
            VariantArg::N2 => Variant::N2,
        }
    }
}

#[derive(Args)]
struct NetworkArgs {
    /// Network JSON file.
    #[arg(long)]
    net: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, env = "DYSON_ISO_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum NetworkCommand {
    /// Green function and its inversion residual.
    Green {
        #[command(flatten)]
        common: NetworkArgs,
    },
    /// GFF covariance estimates.
    Gff {
        #[command(flatten)]
        common: NetworkArgs,
    },
    /// Loop-soup occupation means.
    Loopsoup {
        #[command(flatten)]
        common: NetworkArgs,
        #[arg(long)]
        alpha: f64,
    },
    /// Two-particle eigenvalue field moments.
    Lambda2 {
        #[command(flatten)]
        common: NetworkArgs,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Every network check on the given graph.
    Verify {
        #[command(flatten)]
        common: NetworkArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Verify(args) => verify(args),
        Command::Gbe(cmd) => gbe(cmd).map(|_| true),
        Command::Pnu(cmd) => pnu(cmd).map(|_| true),
        Command::Sde(cmd) => sde(cmd).map(|_| true),
        Command::Network(cmd) => network(cmd),
    }
}

fn print_json(v: &Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).with_context(|| format!("invalid number {s:?}"))
}

fn floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().with_context(|| format!("invalid number {x:?}"))).collect()
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let mut cfg: RunConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &args.suite {
        cfg.suites = SuiteId::parse_selection(s)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse::<ReportFormat>()?;
    }
    if let Some(n) = args.samples {
        cfg.samples = n;
    }
    if args.dt.is_some() {
        cfg.dt = args.dt;
    }
    if let Some(z) = args.z_bound {
        cfg.z_bound = z;
    }
    if args.out.is_some() {
        cfg.output = args.out.clone();
    }
    if args.no_timing {
        cfg.timing = false;
    }
    let report = harness::run(&cfg)?;
    let bytes = emit_report(&report, cfg.format)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, &bytes).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", String::from_utf8_lossy(&bytes)),
    }
    for suite in &report.suites {
        let failed = suite.failures().count();
        eprintln!("{}: {} ({} checks, {failed} failed)", suite.suite, if suite.passed { "PASS" } else { "FAIL" }, suite.checks.len());
    }
    Ok(report.passed)
}

fn estimate_json(e: &Estimate, exact: Option<f64>) -> Value {
    let z = exact.map(|x| e.z_score(x));
    json!({ "estimate": e.value, "stderr": e.stderr, "exact": exact, "zscore": z })
}

fn gbe(cmd: GbeCommand) -> Result<()> {
    match cmd {
        GbeCommand::Moment { nu, beta, n } => match (beta, n) {
            (None, None) => println!("{}", sd_moment(&nu)),
            (Some(b), Some(n)) => println!("{}", sd_moment_eval(&nu, &rational(&b)?, &rational(&n)?)),
            _ => bail!("--beta and --n must be given together"),
        },
        GbeCommand::Sample { nu, beta, n, samples, seed } => {
            let beta_r = rational(&beta)?;
            let exact = rational_to_f64(&sd_moment_eval(&nu, &beta_r, &Rational::from_integer((n as i64).into())));
            let beta_f = rational_to_f64(&beta_r);
            sample_gbe(n, beta_f, &mut rng::stream(seed, 0))?;
            let values = rng::replicas(seed, samples, |r| {
                let s = sample_gbe(n, beta_f, r).expect("validated");
                power_sum_family(&s.eigenvalues, nu.entries())
            });
            let mut out = estimate_json(&mean_estimate(&values), Some(exact));
            out["seed"] = json!(seed);
            out["samples"] = json!(samples);
            out["nu"] = json!(nu.to_string());
            print_json(&out)?;
        }
        GbeCommand::CheckGamma { nu, beta, n, k, samples, seed } => {
            let check = gamma_identity_check(&nu, &rational(&beta)?, n, k, samples, seed)?;
            print_json(&serde_json::to_value(check)?)?;
        }
    }
    Ok(())
}

fn pnu(cmd: PnuCommand) -> Result<()> {
    match cmd {
        PnuCommand::Build { nu } => println!("{}", build_pnu(&nu)?.poly),
        PnuCommand::Eval { mode, nu, points, beta, n, k, chi } => match mode {
            EvalMode::Halfline => {
                let pts = points.split(',').map(rational).collect::<Result<Vec<_>>>()?;
                let v = eval_halfline_exact(&nu, &rational(&beta)?, &rational(&n)?, &pts)?;
                println!("{v}");
            }
            EvalMode::Stationary => {
                let k = k.context("--K is required for the stationary mode")?;
                let (b, n) = (rational_to_f64(&rational(&beta)?), rational_to_f64(&rational(&n)?));
                println!("{}", eval_stationary(&nu, b, n, k, &floats(&points)?)?);
            }
            EvalMode::Chi => {
                let chi = chi.context("--chi is required for the chi mode")?;
                let (b, n) = (rational_to_f64(&rational(&beta)?), rational_to_f64(&rational(&n)?));
                println!("{}", eval_chi(&nu, b, n, &solve_chi(&chi)?, &floats(&points)?)?);
            }
        },
    }
    Ok(())
}

fn sde(cmd: SdeCommand) -> Result<()> {
    let SdeCommand::Dyson { variant, scheme, beta, n, paths, dt, points, k, chi, orders, seed, csv } = cmd;
    let variant = Variant::from(variant);
    let record = floats(&points)?;
    let orders: Vec<u32> = orders
        .split(',')
        .map(|q| q.trim().parse::<u32>().with_context(|| format!("invalid order {q:?}")))
        .collect::<Result<_>>()?;
    let scheme = match scheme {
        SchemeArg::Euler => DriftScheme::Euler,
        SchemeArg::Heun => DriftScheme::Heun,
    };
    let mut cfg = SdeConfig::new(n, beta, record.clone()).with_scheme(scheme);
    if let Some(dt) = dt {
        cfg = cfg.with_dt(dt);
    }
    if let Some(k) = k {
        cfg = cfg.with_k(k);
    }
    if let Some(chi) = chi {
        cfg = cfg.with_chi(chi);
    }
    let sample = simulate_many(variant, &cfg, seed, paths)?;
    let mut moments = Vec::new();
    for (i, x) in record.iter().enumerate() {
        for &q in &orders {
            let values: Vec<f64> = sample.iter().map(|p| p.power_sum(i, q)).collect();
            let e = mean_estimate(&values);
            let single = IndexFamily::new(vec![q])?;
            let exact = match variant {
                Variant::Halfline | Variant::N2 => eval_halfline(&single, beta, n as f64, &[*x]).ok(),
                Variant::Stationary => k.and_then(|k| eval_stationary(&single, beta, n as f64, k, &[*x]).ok()),
                Variant::Tilted => None,
            };
            let mut m = estimate_json(&e, exact);
            m["point"] = json!(x);
            m["order"] = json!(q);
            moments.push(m);
        }
    }
    let events: u64 = sample.iter().map(|p| p.clamp_events).sum();
    let steps: u64 = sample.iter().map(|p| p.steps).sum();
    let warnings = sample.iter().filter(|p| p.warning).count();
    print_json(&json!({
        "variant": variant,
        "n": n,
        "beta": beta,
        "paths": paths,
        "dt": cfg.step(),
        "seed": seed,
        "moments": moments,
        "clamp": { "events": events, "steps": steps, "rate": if steps == 0 { 0.0 } else { events as f64 / steps as f64 } },
        "warnings": warnings,
    }))?;
    if let Some(path) = csv {
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["path", "point", "eigenvalues", "clamp_events"])?;
        for p in &sample {
            for (i, x) in p.grid.iter().enumerate() {
                let eig: Vec<String> = p.values[i].iter().map(|v| v.to_string()).collect();
                w.write_record([p.stream.to_string(), x.to_string(), eig.join(" "), p.clamp_events.to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn load_network(path: &PathBuf) -> Result<Network> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.parse()?)
}

fn network(cmd: NetworkCommand) -> Result<bool> {
    match cmd {
        NetworkCommand::Green { common } => {
            let net = load_network(&common.net)?;
            let g = build_green(&net)?;
            let rows: Vec<Vec<f64>> = (0..g.dim()).map(|i| (0..g.dim()).map(|j| g.get(i, j)).collect()).collect();
            let vertices: Vec<String> = net.vertices().iter().map(|v| v.to_string()).collect();
            print_json(&json!({ "vertices": vertices, "green": rows, "residual": g.residual() }))?;
        }
        NetworkCommand::Gff { common } => {
            let net = load_network(&common.net)?;
            let g = build_green(&net)?;
            let draws = rng::replicas(common.seed, common.samples, |r| g.sample_gff(r));
            let cov: Vec<Value> = (0..g.dim())
                .flat_map(|x| (x..g.dim()).map(move |y| (x, y)))
                .map(|(x, y)| {
                    let e = mean_estimate(&draws.iter().map(|d| d[x] * d[y]).collect::<Vec<_>>());
                    let mut v = estimate_json(&e, Some(g.get(x, y)));
                    v["x"] = json!(x);
                    v["y"] = json!(y);
                    v
                })
                .collect();
            print_json(&json!({ "seed": common.seed, "samples": common.samples, "covariance": cov }))?;
        }
        NetworkCommand::Loopsoup { common, alpha } => {
            let net = load_network(&common.net)?;
            let g = build_green(&net)?;
            let soup = LoopSoup::new(&net, alpha)?;
            let draws = rng::replicas(common.seed, common.samples, |r| soup.sample(r));
            let means: Vec<Value> = (0..net.len())
                .map(|x| {
                    let e = mean_estimate(&draws.iter().map(|d| d[x]).collect::<Vec<_>>());
                    let mut v = estimate_json(&e, Some(alpha * g.get(x, x)));
                    v["x"] = json!(x);
                    v
                })
                .collect();
            print_json(&json!({
                "alpha": alpha,
                "seed": common.seed,
                "samples": common.samples,
                "k_max": soup.k_max(),
                "tail_bound": soup.tail_bound(),
                "occupation": means,
            }))?;
        }
        NetworkCommand::Lambda2 { common, beta } => {
            let net = load_network(&common.net)?;
            let sampler = LambdaSampler::new(&net, beta)?;
            let draws = rng::replicas(common.seed, common.samples, |r| sampler.sample(r));
            let p2: Vec<Value> = (0..net.len())
                .map(|x| {
                    let e = mean_estimate(&draws.iter().map(|d| d.power_sum(x, 2)).collect::<Vec<_>>());
                    let mut v = estimate_json(&e, Some((beta + 2.0) * sampler.green().get(x, x)));
                    v["x"] = json!(x);
                    v
                })
                .collect();
            print_json(&json!({ "beta": beta, "seed": common.seed, "samples": common.samples, "p2": p2 }))?;
        }
        NetworkCommand::Verify { common, out } => {
            let net = load_network(&common.net)?;
            let cfg = RunConfig { seed: common.seed, samples: common.samples, ..RunConfig::default() };
            let report = harness::verify_network(&net, &cfg)?;
            let bytes = serde_json::to_vec_pretty(&report)?;
            match out {
                Some(path) => std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?,
                None => println!("{}", String::from_utf8_lossy(&bytes)),
            }
            eprintln!("network: {} ({} checks)", if report.passed { "PASS" } else { "FAIL" }, report.checks.len());
            return Ok(report.passed);
        }
    }
    Ok(true)
}
