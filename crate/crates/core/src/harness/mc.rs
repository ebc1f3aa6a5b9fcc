//! Monte Carlo suites on the half-line: free, stationary and
//! `chi`-tilted beta-Dyson motion, and the squared Bessel occupation laws.

use super::{CheckRecord, Group, RunConfig};
use crate::algebra::{perm_alpha, SquareMatrix};
use crate::gbe::{power_sum, IndexFamily};
use crate::line::{
    dimension_f64, green_halfline, green_massive, laplace_total, solve_chi, ChiSolution, PiecewiseConstChi,
};
use crate::pnu::{eval_chi, eval_halfline, eval_stationary, families_of_size};
use crate::rng;
use crate::sde::{simulate_besq, simulate_many, BesqVariant, CirScheme, SamplePath, SdeConfig, Variant};
use crate::stats::{mean_estimate, Estimate};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

/// Record points shared by the path suites.
pub(super) const POINTS: [f64; 3] = [0.5, 1.0, 1.5];
/// Killing rate of the stationary suite.
const STATIONARY_K: f64 = 0.5;
/// Occupation intensities for the squared Bessel checks.
const ALPHAS: [f64; 3] = [0.5, 1.0, 1.75];

/// `(n, beta, exact)`: `exact` selects the Bessel construction for `n = 2`.
const CASES: [(usize, f64, bool); 7] = [
    (2, 0.0, false),
    (2, 1.0, false),
    (2, 2.5, false),
    (2, -0.5, true),
    (3, 0.0, false),
    (3, 1.0, false),
    (3, 2.5, false),
];

pub(super) fn test_chi() -> PiecewiseConstChi {
    PiecewiseConstChi::new(vec![(0.2, 0.0), (0.8, 0.5), (1.2, 1.0)]).expect("valid chi")
}

/// Families with `|nu| <= 4` and at most three entries.
pub(super) fn families() -> Vec<IndexFamily> {
    [2, 4].into_iter().flat_map(families_of_size).filter(|nu| nu.len() <= 3).collect()
}

/// Which record points a family of `m` entries uses.
pub(super) fn point_indices(m: usize) -> &'static [usize] {
    match m {
        0 => &[],
        1 => &[1],
        2 => &[0, 2],
        _ => &[0, 1, 2],
    }
}

fn points_for(nu: &IndexFamily) -> Vec<f64> {
    point_indices(nu.len()).iter().map(|&i| POINTS[i]).collect()
}

fn product(path: &SamplePath, nu: &IndexFamily) -> f64 {
    nu.entries()
        .iter()
        .zip(point_indices(nu.len()))
        .map(|(&q, &i)| power_sum(&path.values[i], q))
        .product()
}

fn case_label(n: usize, beta: f64, exact: bool) -> String {
    format!("n={n} beta={beta}{}", if exact { " bessel" } else { "" })
}

fn estimate(paths: &[SamplePath], f: impl Fn(&SamplePath) -> f64) -> Estimate {
    let xs: Vec<f64> = paths.iter().map(f).collect();
    mean_estimate(&xs)
}

fn sde_config(cfg: &RunConfig, n: usize, beta: f64) -> SdeConfig {
    let mut s = SdeConfig::new(n, beta, POINTS.to_vec());
    s.dt = cfg.dt;
    s
}

fn clamp_check(g: &mut Group, name: String, paths: &[SamplePath]) {
    let steps: u64 = paths.iter().map(|p| p.steps).sum();
    let clamps: u64 = paths.iter().map(|p| p.clamp_events).sum();
    let rate = if steps == 0 { 0.0 } else { clamps as f64 / steps as f64 };
    g.exact(name, "drift clamp rate below 0.1%", rate < crate::sde::CLAMP_WARN_RATE, Some(format!("rate {rate:.2e}")));
}

pub(super) fn halfline_iso(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let chi = test_chi();
    let sol = solve_chi(&chi).map_err(|e| e.to_string())?;
    let groups: Vec<Result<Vec<CheckRecord>, String>> = CASES
        .par_iter()
        .map(|&(n, beta, exact)| halfline_case(cfg, n, beta, exact, &chi, &sol))
        .chain(ALPHAS.par_iter().map(|&a| besq_halfline(cfg, a)))
        .collect();
    groups.into_iter().collect::<Result<Vec<_>, _>>().map(|v| v.concat())
}

fn halfline_case(
    cfg: &RunConfig,
    n: usize,
    beta: f64,
    exact: bool,
    chi: &PiecewiseConstChi,
    sol: &ChiSolution,
) -> Result<Vec<CheckRecord>, String> {
    let label = case_label(n, beta, exact);
    let mut g = Group::new(cfg, &format!("halfline {label}"));
    let scfg = sde_config(cfg, n, beta).with_observe(chi.clone());
    let variant = if exact { Variant::N2 } else { Variant::Halfline };
    let paths = simulate_many(variant, &scfg, g.seed(), g.samples()).map_err(|e| e.to_string())?;
    let nf = n as f64;

    for nu in families() {
        let exact_value = eval_halfline(&nu, beta, nf, &points_for(&nu)).map_err(|e| e.to_string())?;
        g.z(format!("halfline {label} nu={nu}"), "symmetric moments of Dyson motion", estimate(&paths, |p| product(p, &nu)), exact_value);
    }

    // Exponential functional of the squared field.
    let laplace = laplace_total(chi, beta, nf).map_err(|e| e.to_string())?;
    let weight = |p: &SamplePath| (-0.5 * p.observed.expect("observed")).exp();
    g.z(format!("dynkin {label} nu=()"), "Laplace functional of p_2", estimate(&paths, weight), laplace);
    for nu in families() {
        let rhs = laplace * eval_chi(&nu, beta, nf, sol, &points_for(&nu)).map_err(|e| e.to_string())?;
        g.z(
            format!("dynkin {label} nu={nu}"),
            "isomorphism with exponential functional",
            estimate(&paths, |p| product(p, &nu) * weight(p)),
            rhs,
        );
    }

    // The centre p_1 / sqrt(n) is independent of the traceless part.
    let q = |v: &[f64]| power_sum(v, 2) - power_sum(v, 1).powi(2) / nf;
    let d = dimension_f64(beta, nf);
    g.z(format!("traceless mean {label}"), "traceless part is squared Bessel of dimension d-1", estimate(&paths, |p| 0.5 * q(&p.values[1])), (d - 1.0) * POINTS[1]);
    g.z(format!("centre independence {label} early"), "centre independent of traceless part", estimate(&paths, |p| power_sum(&p.values[0], 1) * q(&p.values[2])), 0.0);
    g.z(format!("centre independence {label} late"), "centre independent of traceless part", estimate(&paths, |p| power_sum(&p.values[2], 1) * q(&p.values[0])), 0.0);
    if !exact {
        clamp_check(&mut g, format!("clamp rate halfline {label}"), &paths);
    }
    Ok(g.finish())
}

fn perm_g(points: &[f64], alpha: f64, green: impl Fn(f64, f64) -> f64) -> f64 {
    let m = SquareMatrix::from_fn(points.len(), |i, j| green(points[i], points[j]));
    perm_alpha(&m, &alpha).expect("small matrix")
}

/// Point sets for the occupation moments, as indices into `POINTS`.
const MOMENT_SETS: [&[usize]; 5] = [&[1], &[1, 1], &[0, 2], &[0, 1, 2], &[1, 1, 2]];

fn moment_checks(
    g: &mut Group,
    prefix: &str,
    paths: &[Vec<f64>],
    alpha: f64,
    green: impl Fn(f64, f64) -> f64 + Copy,
) {
    for set in MOMENT_SETS {
        let pts: Vec<f64> = set.iter().map(|&i| POINTS[i]).collect();
        let est = mean_estimate(&paths.iter().map(|l| set.iter().map(|&i| l[i]).product()).collect::<Vec<f64>>());
        g.z(format!("{prefix} moment {pts:?}"), "permanental occupation moments", est, perm_g(&pts, alpha, green));
    }
}

fn besq_halfline(cfg: &RunConfig, alpha: f64) -> Result<Vec<CheckRecord>, String> {
    let mut g = Group::new(cfg, &format!("besq halfline alpha={alpha}"));
    let seed = g.seed();
    let paths: Vec<Vec<f64>> = rng::replicas(seed, g.samples(), |r| {
        simulate_besq(2.0 * alpha, BesqVariant::Halfline, &POINTS, CirScheme::Exact, 1e-3, r)
            .map(|p| p.values)
            .map_err(|e| e.to_string())
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let prefix = format!("besq halfline alpha={alpha}");
    for (i, &x) in POINTS.iter().enumerate() {
        let law = GammaDist::new(alpha, 1.0 / (2.0 * x)).map_err(|e| e.to_string())?;
        let xs: Vec<f64> = paths.iter().map(|l| l[i]).collect();
        g.ks(format!("{prefix} marginal x={x}"), "occupation marginal is Gamma(alpha, 1/G(x,x))", &xs, |v| law.cdf(v));
    }
    moment_checks(&mut g, &prefix, &paths, alpha, green_halfline);
    if alpha == 0.5 {
        // phi^2 / 2 for phi with covariance 2 min(x, y).
        let gauss: Vec<Vec<f64>> = rng::replicas(rng::derive_seed(seed, "gaussian"), g.samples(), |r| {
            let mut phi = 0.0;
            let mut prev = 0.0;
            POINTS
                .iter()
                .map(|&x| {
                    let z: f64 = r.sample(StandardNormal);
                    phi += (2.0 * (x - prev)).sqrt() * z;
                    prev = x;
                    0.5 * phi * phi
                })
                .collect()
        });
        for set in MOMENT_SETS {
            let f = |l: &Vec<f64>| set.iter().map(|&i| l[i]).product::<f64>();
            let a = mean_estimate(&paths.iter().map(f).collect::<Vec<_>>());
            let b = mean_estimate(&gauss.iter().map(f).collect::<Vec<_>>());
            let pts: Vec<f64> = set.iter().map(|&i| POINTS[i]).collect();
            g.two_sample(format!("{prefix} gaussian square {pts:?}"), "half occupation is half the Gaussian square", a, b);
        }
    }
    Ok(g.finish())
}

pub(super) fn stationary_iso(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let groups: Vec<Result<Vec<CheckRecord>, String>> = CASES
        .par_iter()
        .map(|&(n, beta, exact)| stationary_case(cfg, n, beta, exact))
        .chain(ALPHAS.par_iter().map(|&a| besq_stationary(cfg, a)))
        .collect();
    groups.into_iter().collect::<Result<Vec<_>, _>>().map(|v| v.concat())
}

fn stationary_case(cfg: &RunConfig, n: usize, beta: f64, exact: bool) -> Result<Vec<CheckRecord>, String> {
    let label = case_label(n, beta, exact);
    let mut g = Group::new(cfg, &format!("stationary {label}"));
    let scfg = sde_config(cfg, n, beta).with_k(STATIONARY_K);
    let variant = if exact { Variant::N2 } else { Variant::Stationary };
    let paths = simulate_many(variant, &scfg, g.seed(), g.samples()).map_err(|e| e.to_string())?;
    let nf = n as f64;
    for nu in families() {
        let want = eval_stationary(&nu, beta, nf, STATIONARY_K, &points_for(&nu)).map_err(|e| e.to_string())?;
        g.z(format!("stationary {label} nu={nu}"), "stationary symmetric moments", estimate(&paths, |p| product(p, &nu)), want);
    }
    for q in [2, 4] {
        let est = estimate(&paths, |p| power_sum(&p.values[2], q) - power_sum(&p.values[0], q));
        g.z(format!("stationarity {label} p{q}"), "time invariance", est, 0.0);
    }
    if !exact {
        clamp_check(&mut g, format!("clamp rate stationary {label}"), &paths);
    }
    Ok(g.finish())
}

fn besq_stationary(cfg: &RunConfig, alpha: f64) -> Result<Vec<CheckRecord>, String> {
    let mut g = Group::new(cfg, &format!("besq stationary alpha={alpha}"));
    let variant = BesqVariant::Stationary { k: STATIONARY_K };
    let paths: Vec<Vec<f64>> = rng::replicas(g.seed(), g.samples(), |r| {
        simulate_besq(2.0 * alpha, variant, &POINTS, CirScheme::Exact, 1e-3, r)
            .map(|p| p.values)
            .map_err(|e| e.to_string())
    })
    .into_iter()
    .collect::<Result<_, _>>()?;
    let prefix = format!("besq stationary alpha={alpha}");
    let law = GammaDist::new(alpha, (2.0 * STATIONARY_K).sqrt()).map_err(|e| e.to_string())?;
    let last: Vec<f64> = paths.iter().map(|l| l[2]).collect();
    g.ks(format!("{prefix} marginal"), "occupation marginal is Gamma(alpha, 1/G_K(x,x))", &last, |v| law.cdf(v));
    moment_checks(&mut g, &prefix, &paths, alpha, |x, y| green_massive(STATIONARY_K, x, y));
    Ok(g.finish())
}

const TILT_CASES: [(usize, f64); 2] = [(3, 1.0), (2, 2.5)];

pub(super) fn chi_tilt(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let chi = test_chi();
    let sol = solve_chi(&chi).map_err(|e| e.to_string())?;
    let mut groups: Vec<Result<Vec<CheckRecord>, String>> =
        TILT_CASES.par_iter().map(|&(n, beta)| tilted_case(cfg, n, beta, &chi, &sol)).collect();
    groups.push(untilted(cfg));
    groups.push(gaussian_laplace(cfg, &chi, &sol));
    groups.into_iter().collect::<Result<Vec<_>, _>>().map(|v| v.concat())
}

fn tilted_case(
    cfg: &RunConfig,
    n: usize,
    beta: f64,
    chi: &PiecewiseConstChi,
    sol: &ChiSolution,
) -> Result<Vec<CheckRecord>, String> {
    let label = case_label(n, beta, false);
    let mut g = Group::new(cfg, &format!("tilted {label}"));
    let scfg = sde_config(cfg, n, beta).with_chi(chi.clone());
    let paths = simulate_many(Variant::Tilted, &scfg, g.seed(), g.samples()).map_err(|e| e.to_string())?;
    let nf = n as f64;
    for nu in families() {
        let want = eval_chi(&nu, beta, nf, sol, &points_for(&nu)).map_err(|e| e.to_string())?;
        g.z(format!("tilted {label} nu={nu}"), "tilted moments are chi-substituted", estimate(&paths, |p| product(p, &nu)), want);
    }
    let d = dimension_f64(beta, nf);
    for (i, &x) in POINTS.iter().enumerate() {
        g.z(
            format!("tilted {label} p2 x={x}"),
            "tilted mean of p_2 is d G_chi(x,x)",
            estimate(&paths, |p| power_sum(&p.values[i], 2)),
            d * sol.green(x, x),
        );
        // lambda~(x) / u(x) has the law of lambda(psi(x)).
        let u = sol.u(x);
        for nu in [vec![2], vec![4]] {
            let nu = IndexFamily::new(nu).expect("positive");
            let want = eval_halfline(&nu, beta, nf, &[sol.psi(x)]).map_err(|e| e.to_string())?;
            let q = nu.entries()[0];
            g.z(
                format!("scale covariance {label} nu={nu} x={x}"),
                "scale covariance of the tilted dynamics",
                estimate(&paths, |p| power_sum(&p.values[i], q) / u.powi(q as i32)),
                want,
            );
        }
    }
    clamp_check(&mut g, format!("clamp rate tilted {label}"), &paths);
    Ok(g.finish())
}

fn untilted(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let (n, beta) = (2, 1.0);
    let label = case_label(n, beta, false);
    let mut g = Group::new(cfg, &format!("untilted {label}"));
    let scfg = sde_config(cfg, n, beta).with_chi(PiecewiseConstChi::zero());
    let paths = simulate_many(Variant::Tilted, &scfg, g.seed(), g.samples()).map_err(|e| e.to_string())?;
    for nu in families() {
        let want = eval_halfline(&nu, beta, n as f64, &points_for(&nu)).map_err(|e| e.to_string())?;
        g.z(format!("zero tilt {label} nu={nu}"), "zero tilt is the free dynamics", estimate(&paths, |p| product(p, &nu)), want);
    }
    Ok(g.finish())
}

/// `<exp(-1/2 int chi phi^2)> = u(inf)^{1/2}` for `phi` with covariance
/// `2 min(x, y)`, the dimension-one case of the Laplace functional.
fn gaussian_laplace(cfg: &RunConfig, chi: &PiecewiseConstChi, sol: &ChiSolution) -> Result<Vec<CheckRecord>, String> {
    let mut g = Group::new(cfg, "gaussian laplace");
    let end = chi.support_end();
    let steps = 2000;
    let h = end / steps as f64;
    let samples: Vec<f64> = rng::replicas(g.seed(), g.samples(), |r| {
        let mut phi: f64 = 0.0;
        let mut acc = 0.0;
        for i in 0..steps {
            let before = phi * phi;
            let z: f64 = r.sample(StandardNormal);
            phi += (2.0 * h).sqrt() * z;
            acc += chi.value((i as f64 + 0.5) * h) * 0.5 * (before + phi * phi) * h;
        }
        (-0.5 * acc).exp()
    });
    g.z("gaussian laplace functional", "Laplace functional of the squared Gaussian", mean_estimate(&samples), sol.u_inf().sqrt());
    Ok(g.finish())
}
