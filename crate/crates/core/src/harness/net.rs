//! Network suite: loop-soup occupation fields and the two-particle
//! eigenvalue field on small graphs, including a cycle.

use super::mc::families;
use super::{CheckRecord, Group, RunConfig};
use crate::algebra::{CoefPoly, Var};
use crate::gbe::{sd_moment, IndexFamily};
use crate::network::{
    build_green, det_ratio, permanental_moment, reweight_killing, GreenMatrix, LambdaSampler, LoopSoup,
    MatrixFieldSampler, Network,
};
use crate::pnu::{build_pnu_hat_n2, eval_halfline};
use crate::rng;
use crate::stats::{mean_estimate, Estimate};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};

const SOUP_ALPHAS: [f64; 2] = [0.5, 1.25];
const LAMBDA_BETAS: [f64; 3] = [-0.5, 1.0, 2.0];
const MATRIX_BETAS: [f64; 2] = [1.0, 2.0];
/// Uniform test vector for Laplace transforms and exponential functionals.
const CHI: f64 = 0.3;

fn graphs() -> Vec<(&'static str, Network)> {
    vec![
        ("V=1", Network::single(1.0).expect("valid")),
        ("V=2", Network::path(2, 1.0, vec![0.5, 1.0]).expect("valid")),
        (
            "C4",
            Network::new(4, vec![(0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.5), (3, 0, 1.0)], vec![0.5, 0.0, 0.3, 0.2])
                .expect("valid"),
        ),
    ]
}

/// Vertices for a family of `m` entries: `0, 1, 2, ...` modulo `|V|`.
fn vertices(net: &Network, m: usize) -> Vec<usize> {
    (0..m).map(|k| k % net.len()).collect()
}

/// Vertex multisets for occupation moments.
fn moment_sets(net: &Network) -> Vec<Vec<usize>> {
    let last = net.len() - 1;
    let mut sets = vec![vec![0], vec![0, 0], vec![0, last], vec![0, 0, last], vertices(net, 3)];
    sets.sort();
    sets.dedup();
    sets
}

fn est(xs: impl Iterator<Item = f64>) -> Estimate {
    mean_estimate(&xs.collect::<Vec<_>>())
}

pub(super) fn network_n2(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let graphs = graphs();
    let jobs: Vec<(&str, &Network, Job)> =
        graphs.iter().flat_map(|(label, net)| jobs().into_iter().map(move |j| (*label, net, j))).collect();
    run_jobs(cfg, &jobs)
}

/// Every network check on a single user-supplied graph.
pub(super) fn network_checks(cfg: &RunConfig, label: &str, net: &Network) -> Result<Vec<CheckRecord>, String> {
    let jobs: Vec<(&str, &Network, Job)> = jobs().into_iter().map(|j| (label, net, j)).collect();
    run_jobs(cfg, &jobs)
}

fn jobs() -> Vec<Job> {
    let mut out = vec![Job::Green];
    out.extend(SOUP_ALPHAS.map(Job::Soup));
    out.extend(LAMBDA_BETAS.map(Job::Lambda));
    out.extend(MATRIX_BETAS.map(Job::Matrix));
    out.push(Job::Independent);
    out
}

fn run_jobs(cfg: &RunConfig, jobs: &[(&str, &Network, Job)]) -> Result<Vec<CheckRecord>, String> {
    let groups: Vec<Result<Vec<CheckRecord>, String>> = jobs
        .par_iter()
        .map(|&(label, net, job)| match job {
            Job::Green => green_checks(cfg, label, net),
            Job::Soup(a) => soup_checks(cfg, label, net, a),
            Job::Lambda(b) => lambda_checks(cfg, label, net, b),
            Job::Matrix(b) => matrix_checks(cfg, label, net, b),
            Job::Independent => independent_checks(cfg, label, net),
        })
        .collect();
    groups.into_iter().collect::<Result<Vec<_>, _>>().map(|v| v.concat())
}

#[derive(Clone, Copy)]
enum Job {
    Green,
    Soup(f64),
    Lambda(f64),
    Matrix(f64),
    Independent,
}

fn green_checks(cfg: &RunConfig, label: &str, net: &Network) -> Result<Vec<CheckRecord>, String> {
    let mut g = Group::new(cfg, &format!("green {label}"));
    let green = build_green(net).map_err(|e| e.to_string())?;
    g.exact(
        format!("green residual {label}"),
        "massive Green function inverts the operator",
        green.residual() < crate::network::RESIDUAL_TOLERANCE,
        Some(format!("{:.2e}", green.residual())),
    );
    let m = green.matrix();
    let symmetric = (m - m.transpose()).amax() == 0.0;
    let spd = nalgebra::Cholesky::new(m.clone()).is_some();
    g.exact(format!("green symmetric positive {label}"), "Green function is symmetric positive definite", symmetric && spd, None);
    Ok(g.finish())
}

fn soup_checks(cfg: &RunConfig, label: &str, net: &Network, alpha: f64) -> Result<Vec<CheckRecord>, String> {
    let prefix = format!("loop soup {label} alpha={alpha}");
    let mut g = Group::new(cfg, &prefix);
    let green = build_green(net).map_err(|e| e.to_string())?;
    let soup = LoopSoup::new(net, alpha).map_err(|e| e.to_string())?;
    let occ: Vec<Vec<f64>> = rng::replicas(g.seed(), g.samples(), |r| soup.sample(r));

    for set in moment_sets(net) {
        let want = permanental_moment(&green, &set, alpha).map_err(|e| e.to_string())?;
        let e = est(occ.iter().map(|l| set.iter().map(|&x| l[x]).product()));
        g.z(format!("{prefix} moment {set:?}"), "occupation field is permanental", e, want);
    }
    let chi = vec![-CHI; net.len()];
    let want = det_ratio(net, &chi).map_err(|e| e.to_string())?.powf(alpha);
    let e = est(occ.iter().map(|l| l.iter().zip(&chi).map(|(v, c)| v * c).sum::<f64>().exp()));
    g.z(format!("{prefix} laplace"), "Laplace transform is a determinant ratio", e, want);
    if net.len() == 1 {
        let law = GammaDist::new(alpha, net.killing()[0]).map_err(|e| e.to_string())?;
        let xs: Vec<f64> = occ.iter().map(|l| l[0]).collect();
        g.ks(format!("{prefix} marginal"), "single-vertex occupation is Gamma(alpha, K)", &xs, |v| law.cdf(v));
    }
    if alpha == 0.5 {
        let gff: Vec<Vec<f64>> = rng::replicas(rng::derive_seed(g.seed(), "gff"), g.samples(), |r| {
            green.sample_gff(r).into_iter().map(|p| 0.5 * p * p).collect()
        });
        for set in moment_sets(net) {
            let f = |l: &Vec<f64>| set.iter().map(|&x| l[x]).product::<f64>();
            g.two_sample(
                format!("{prefix} gaussian square {set:?}"),
                "half occupation is half the squared GFF",
                est(occ.iter().map(f)),
                est(gff.iter().map(f)),
            );
        }
    }
    Ok(g.finish())
}

fn hat_value(nu: &IndexFamily, beta: f64, green: &GreenMatrix, xs: &[usize]) -> Result<f64, String> {
    let hat = build_pnu_hat_n2(nu).map_err(|e| e.to_string())?;
    hat.hat
        .eval(&beta, &2.0, |v| match v {
            Var::Diag(k) => xs.get(k as usize - 1).map(|&x| green.get(x, x)),
            Var::Pair(k, l) => Some(green.get(*xs.get(k as usize - 1)?, *xs.get(l as usize - 1)?)),
            Var::Check(_) => None,
        })
        .map_err(|e| e.to_string())
}

fn lambda_product(sample: &crate::network::FieldSample, nu: &IndexFamily, xs: &[usize]) -> f64 {
    nu.entries().iter().zip(xs).map(|(&q, &x)| sample.power_sum(x, q)).product()
}

fn gbe_moment(q: u32, beta: f64) -> f64 {
    let c: CoefPoly = sd_moment(&IndexFamily::new(vec![q]).expect("positive"));
    c.eval(&beta, &2.0)
}

fn lambda_checks(cfg: &RunConfig, label: &str, net: &Network, beta: f64) -> Result<Vec<CheckRecord>, String> {
    let prefix = format!("lambda {label} beta={beta}");
    let mut g = Group::new(cfg, &prefix);
    let sampler = LambdaSampler::new(net, beta).map_err(|e| e.to_string())?;
    let green = sampler.green().clone();
    let fields = rng::replicas(g.seed(), g.samples(), |r| sampler.sample(r));

    // One-point law: lambda(x) / sqrt(G(x,x)) is GbE with n = 2.
    for x in 0..net.len() {
        for q in [2, 4] {
            let want = gbe_moment(q, beta) * green.get(x, x).powi(q as i32 / 2);
            g.z(format!("{prefix} one-point p{q} x={x}"), "one-point law is GbE", est(fields.iter().map(|f| f.power_sum(x, q))), want);
        }
    }

    // Multi-point moments are P-hat at the Green function.
    for nu in families() {
        let xs = vertices(net, nu.len());
        let want = hat_value(&nu, beta, &green, &xs)?;
        g.z(format!("{prefix} moment nu={nu} at {xs:?}"), "moments are P-hat at the Green function", est(fields.iter().map(|f| lambda_product(f, &nu, &xs))), want);
    }

    // Two points as Dyson motion at times 1 and eta.
    if net.len() >= 2 {
        let (x, y) = (0, 1);
        let gxy = green.get(x, y);
        let eta = green.get(x, x) * green.get(y, y) / (gxy * gxy);
        let a = (2.0 / green.get(x, x)).sqrt();
        let b = (2.0 * eta / green.get(y, y)).sqrt();
        for nu in families().into_iter().filter(|nu| nu.len() == 2) {
            let (p, q) = (nu.entries()[0], nu.entries()[1]);
            let want = eval_halfline(&nu, beta, 2.0, &[1.0, eta]).map_err(|e| e.to_string())?;
            let scale = a.powi(p as i32) * b.powi(q as i32);
            g.z(
                format!("{prefix} two-point dyson nu={nu}"),
                "two-point law is Dyson motion at 1 and eta",
                est(fields.iter().map(|f| scale * f.power_sum(x, p) * f.power_sum(y, q))),
                want,
            );
        }
    }

    // Exponential functional: det-ratio factor times P-hat at G_{K+chi}.
    let chi = vec![CHI; net.len()];
    let alpha = 0.5 * (beta + 2.0);
    let laplace = det_ratio(net, &chi.iter().map(|c| -c).collect::<Vec<_>>()).map_err(|e| e.to_string())?.powf(alpha);
    let massive_k: Vec<f64> = net.killing().iter().zip(&chi).map(|(k, c)| k + c).collect();
    let massive = build_green(&net.with_killing(massive_k).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let weight = |f: &crate::network::FieldSample| {
        (-0.5 * (0..net.len()).map(|x| chi[x] * f.power_sum(x, 2)).sum::<f64>()).exp()
    };
    g.z(format!("{prefix} dynkin nu=()"), "Laplace functional of p_2", est(fields.iter().map(weight)), laplace);
    for nu in families() {
        let xs = vertices(net, nu.len());
        let want = laplace * hat_value(&nu, beta, &massive, &xs)?;
        g.z(
            format!("{prefix} dynkin nu={nu} at {xs:?}"),
            "isomorphism with exponential functional",
            est(fields.iter().map(|f| lambda_product(f, &nu, &xs) * weight(f))),
            want,
        );
    }

    // Change of killing measure by reweighting.
    let other_k: Vec<f64> = net.killing().iter().map(|k| k + CHI).collect();
    let density = reweight_killing(net, &other_k, beta).map_err(|e| e.to_string())?;
    let other_net = net.with_killing(other_k).map_err(|e| e.to_string())?;
    let other = LambdaSampler::new(&other_net, beta).map_err(|e| e.to_string())?;
    let direct = rng::replicas(rng::derive_seed(g.seed(), "direct"), g.samples(), |r| other.sample(r));
    g.z(format!("{prefix} reweight mass"), "killing change density integrates to one", est(fields.iter().map(|f| density.density(f))), 1.0);
    for x in 0..net.len() {
        let reweighted = est(fields.iter().map(|f| density.density(f) * f.power_sum(x, 2)));
        let want = (beta + 2.0) * other.green().get(x, x);
        g.z(format!("{prefix} reweight p2 x={x}"), "killing change density", reweighted, want);
        g.two_sample(
            format!("{prefix} reweight vs direct p2 x={x}"),
            "killing change density",
            reweighted,
            est(direct.iter().map(|f| f.power_sum(x, 2))),
        );
    }
    Ok(g.finish())
}

fn matrix_checks(cfg: &RunConfig, label: &str, net: &Network, beta: f64) -> Result<Vec<CheckRecord>, String> {
    let prefix = format!("matrix field {label} beta={beta}");
    let mut g = Group::new(cfg, &prefix);
    let sampler = MatrixFieldSampler::new(net, beta).map_err(|e| e.to_string())?;
    let lambda = LambdaSampler::new(net, beta).map_err(|e| e.to_string())?;
    let green = lambda.green().clone();
    let draws = rng::replicas(g.seed(), g.samples(), |r| sampler.sample(r));
    let reference = rng::replicas(rng::derive_seed(g.seed(), "lambda"), g.samples(), |r| lambda.sample(r));
    let last = net.len() - 1;

    for x in 0..net.len() {
        for q in [2, 4] {
            g.two_sample(
                format!("{prefix} p{q} x={x}"),
                "matrix eigenvalue field matches the lambda field",
                est(draws.iter().map(|d| d.eigenvalues.power_sum(x, q))),
                est(reference.iter().map(|f| f.power_sum(x, q))),
            );
        }
    }
    if last > 0 {
        g.two_sample(
            format!("{prefix} p2p2 x=0,{last}"),
            "matrix eigenvalue field matches the lambda field",
            est(draws.iter().map(|d| d.eigenvalues.power_sum(0, 2) * d.eigenvalues.power_sum(last, 2))),
            est(reference.iter().map(|f| f.power_sum(0, 2) * f.power_sum(last, 2))),
        );
    }
    let mut points = vec![(0, 0), (0, last)];
    points.dedup();
    for (x, y) in points {
        g.z(
            format!("{prefix} trace covariance {x},{y}"),
            "trace field is a GFF with covariance 2G",
            est(draws.iter().map(|d| d.eigenvalues.power_sum(x, 1) * d.eigenvalues.power_sum(y, 1))),
            2.0 * green.get(x, y),
        );
    }
    let alpha = 0.5 * (beta + 2.0);
    for set in moment_sets(net) {
        let want = permanental_moment(&green, &set, alpha - 0.5).map_err(|e| e.to_string())?;
        let e = est(draws.iter().map(|d| {
            set.iter()
                .map(|&x| {
                    let h = 0.5 * (d.phi2[x] - d.phi1[x]);
                    d.occupation[x] + h * h
                })
                .product()
        }));
        g.z(format!("{prefix} gap occupation {set:?}"), "gap field is permanental with alpha - 1/2", e, want);
    }
    Ok(g.finish())
}

/// At `beta = 0` the pair is two independent GFFs, reordered.
fn independent_checks(cfg: &RunConfig, label: &str, net: &Network) -> Result<Vec<CheckRecord>, String> {
    let prefix = format!("independent pair {label}");
    let mut g = Group::new(cfg, &prefix);
    let lambda = LambdaSampler::new(net, 0.0).map_err(|e| e.to_string())?;
    let green = lambda.green().clone();
    let fields = rng::replicas(g.seed(), g.samples(), |r| lambda.sample(r));
    let pairs: Vec<[Vec<f64>; 2]> = rng::replicas(rng::derive_seed(g.seed(), "gff"), g.samples(), |r| {
        let a = green.sample_gff(r);
        let b = green.sample_gff(r);
        let hi = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let lo = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        [hi, lo]
    });
    let mut points = vec![(0, 0), (0, net.len() - 1)];
    points.dedup();
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        for &(x, y) in &points {
            g.two_sample(
                format!("{prefix} lambda{}(x{x}) lambda{}(x{y})", i + 1, j + 1),
                "beta = 0 pair is two reordered GFFs",
                est(fields.iter().map(|f| f.components[i][x] * f.components[j][y])),
                est(pairs.iter().map(|p| p[i][x] * p[j][y])),
            );
        }
    }
    Ok(g.finish())
}
