//! Independent oracles: brute-force Gaussian and two-particle moments,
//! an RK4 solver for the tilt equation, quadrature for the scale function,
//! cofactor Green functions and cycle-expansion alpha-permanents.

use dyson_iso::algebra::{int, rational_to_f64, Ring};
use dyson_iso::gbe::{sd_moment, sd_moment_eval, IndexFamily};
use dyson_iso::line::{green_halfline, laplace_total, solve_chi, PiecewiseConstChi};
use dyson_iso::network::{build_green, det_ratio, permanental_moment, Network};
use dyson_iso::pnu::{build_pnu, eval_halfline, families_of_size, PnuError};
use std::collections::BTreeMap;

fn families(max: u32) -> Vec<IndexFamily> {
    (1..=max).flat_map(families_of_size).collect()
}

fn even_families(max: u32) -> Vec<IndexFamily> {
    families(max).into_iter().filter(|nu| nu.size() % 2 == 0).collect()
}

fn double_factorial_odd(q: u32) -> u64 {
    // E[X^q] for a standard Gaussian.
    if q % 2 == 1 {
        return 0;
    }
    (1..q).step_by(2).map(u64::from).product()
}

/// `<p_nu>` for `n` independent standard Gaussians, by summing over which
/// coordinate each power-sum factor picks.
fn iid_gaussian_moment(nu: &[u32], n: usize) -> u64 {
    let m = nu.len();
    let mut total = 0;
    for code in 0..n.pow(m as u32) {
        let mut powers = vec![0u32; n];
        let mut c = code;
        for &q in nu {
            powers[c % n] += q;
            c /= n;
        }
        total += powers.iter().map(|&p| double_factorial_odd(p)).product::<u64>();
    }
    total
}

#[test]
fn beta_zero_moments_match_independent_gaussians() {
    for nu in families(8) {
        for n in 1..=3usize {
            let got = sd_moment_eval(&nu, &int(0), &int(n as i64));
            assert_eq!(got, int(iid_gaussian_moment(nu.entries(), n) as i64), "nu={nu} n={n}");
        }
    }
}

#[test]
fn one_particle_moments_do_not_depend_on_beta() {
    for nu in families(8) {
        let want = double_factorial_odd(nu.size()) as f64;
        for beta in [0.5, 1.0, 2.5, 4.0] {
            let got = sd_moment(&nu).eval(&beta, &1.0);
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "nu={nu} beta={beta}");
        }
    }
}

/// Two particles: `s = (l1 + l2)/sqrt 2` is standard Gaussian and
/// `d = (l1 - l2)/sqrt 2` has density proportional to `|d|^beta e^{-d^2/2}`.
fn two_particle_moment(nu: &[u32], beta: f64) -> f64 {
    let mut poly: BTreeMap<(u32, u32), f64> = BTreeMap::from([((0, 0), 1.0)]);
    for &q in nu {
        let mut factor = BTreeMap::new();
        let mut binom = 1.0;
        for i in 0..=q {
            if i % 2 == 0 {
                factor.insert((q - i, i), 2.0 * binom * 2f64.powf(-f64::from(q) / 2.0));
            }
            binom = binom * f64::from(q - i) / f64::from(i + 1);
        }
        let mut next = BTreeMap::new();
        for (&(a, b), &c) in &poly {
            for (&(a2, b2), &c2) in &factor {
                *next.entry((a + a2, b + b2)).or_insert(0.0) += c * c2;
            }
        }
        poly = next;
    }
    let d_moment = |b: u32| {
        if b % 2 == 1 {
            return 0.0;
        }
        (0..b / 2).map(|i| 2.0 * (f64::from(i) + (beta + 1.0) / 2.0)).product::<f64>()
    };
    poly.iter().map(|(&(a, b), &c)| c * double_factorial_odd(a) as f64 * d_moment(b)).sum()
}

#[test]
fn two_particle_moments_match_the_joint_density() {
    for nu in families(8) {
        for beta in [0.5, 1.0, 2.5, 4.0] {
            let want = two_particle_moment(nu.entries(), beta);
            let got = sd_moment(&nu).eval(&beta, &2.0);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "nu={nu} beta={beta}: {got} vs {want}");
        }
    }
}

#[test]
fn halfline_one_point_is_scaled_ensemble_moment() {
    // lambda(x) / sqrt(2x) is the ensemble at time x.
    for nu in even_families(6).into_iter().filter(|nu| nu.len() == 1) {
        for (beta, n) in [(1.0, 3.0), (2.5, 2.0)] {
            let x: f64 = 0.7;
            let want = sd_moment(&nu).eval(&beta, &n) * (2.0 * x).powf(f64::from(nu.size()) / 2.0);
            let got = eval_halfline(&nu, beta, n, &[x]).unwrap();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }
}

#[test]
fn odd_total_degree_is_rejected() {
    // The odd moments vanish by symmetry; the builder refuses them.
    for nu in families(7).into_iter().filter(|nu| nu.size() % 2 == 1) {
        assert!(matches!(build_pnu(&nu), Err(PnuError::OddDegree(_))), "nu={nu}");
        assert!(sd_moment(&nu).is_zero_value(), "nu={nu}");
    }
}

/// Integrates `u'' = 2 chi u` backwards from the end of the support with
/// classical RK4 and returns `(x, u(x))` normalized by `u(0) = 1`.
fn rk4_tilt(chi: &PiecewiseConstChi, steps_per_unit: usize) -> Vec<(f64, f64)> {
    let end = chi.support_end();
    let n = (end * steps_per_unit as f64).ceil() as usize;
    let h = end / n as f64;
    // Breakpoints sit on the grid, so chi is constant within each step.
    let f = |c: f64, (u, v): (f64, f64)| (v, 2.0 * c * u);
    let mut state = (1.0, 0.0);
    let mut out = vec![(end, state.0)];
    for i in 0..n {
        let x = end - i as f64 * h;
        let c = chi.value(x - 0.5 * h);
        let at = |k: (f64, f64), s: f64| (state.0 - s * h * k.0, state.1 - s * h * k.1);
        let k1 = f(c, state);
        let k2 = f(c, at(k1, 0.5));
        let k3 = f(c, at(k2, 0.5));
        let k4 = f(c, at(k3, 1.0));
        state = (
            state.0 - h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            state.1 - h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        );
        out.push((x - h, state.0));
    }
    out.reverse();
    let u0 = out[0].1;
    out.into_iter().map(|(x, u)| (x, u / u0)).collect()
}

fn test_chis() -> Vec<PiecewiseConstChi> {
    vec![
        "1:0.7".parse().unwrap(),
        "0.2:0,0.8:0.5,1.2:1".parse().unwrap(),
        "0.5:2,1:0,2:0.3".parse().unwrap(),
    ]
}

#[test]
fn tilt_solution_matches_rk4() {
    for chi in test_chis() {
        let sol = solve_chi(&chi).unwrap();
        let path = rk4_tilt(&chi, 20_000);
        for &(x, u) in path.iter().step_by(1000) {
            assert!((sol.u(x) - u).abs() < 1e-8, "chi={chi} x={x}: {} vs {u}", sol.u(x));
        }
        let u_end = path.last().unwrap().1;
        assert!((sol.u_inf() - u_end).abs() < 1e-8);
        assert!((sol.u(chi.support_end() + 3.0) - u_end).abs() < 1e-8);
    }
}

#[test]
fn closed_form_single_step_tilt() {
    // chi = c on [0, a): u = cosh(w x) - tanh(w a) sinh(w x), w = sqrt(2c).
    let (c, a) = (0.7, 1.0);
    let sol = solve_chi(&PiecewiseConstChi::indicator(c, 0.0, a).unwrap()).unwrap();
    let w = (2.0 * c).sqrt();
    for x in [0.0, 0.25, 0.5, 0.99] {
        let want = (w * x).cosh() - (w * a).tanh() * (w * x).sinh();
        assert!((sol.u(x) - want).abs() < 1e-12);
    }
    assert!((sol.u_inf() - 1.0 / (w * a).cosh()).abs() < 1e-12);
    assert!((laplace_total(sol.chi(), 1.0, 2.0).unwrap() - sol.u_inf().powf(1.5)).abs() < 1e-12);
}

#[test]
fn scale_function_matches_quadrature() {
    for chi in test_chis() {
        let sol = solve_chi(&chi).unwrap();
        for x in [0.3, 0.9, 1.7, 3.0] {
            // Composite Simpson on a fine grid of 1/u^2.
            let n = 20_000;
            let h = x / n as f64;
            let f = |t: f64| sol.u(t).powi(-2);
            let mut s = f(0.0) + f(x);
            for i in 1..n {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            let want = s * h / 3.0;
            assert!((sol.psi(x) - want).abs() < 1e-6 * want, "chi={chi} x={x}");
            assert!((sol.green(x, x) - 2.0 * sol.u(x).powi(2) * want).abs() < 1e-6 * want);
        }
    }
}

#[test]
fn zero_tilt_is_the_halfline() {
    let sol = solve_chi(&PiecewiseConstChi::zero()).unwrap();
    for (x, y) in [(0.2, 0.7), (1.5, 0.3), (2.0, 2.0)] {
        assert!((sol.green(x, y) - green_halfline(x, y)).abs() < 1e-12);
    }
}

#[test]
fn two_vertex_green_matches_cofactors() {
    let (c, k1, k2) = (1.3, 0.5, 0.2);
    let net = Network::path(2, c, vec![k1, k2]).unwrap();
    let g = build_green(&net).unwrap();
    let det = (c + k1) * (c + k2) - c * c;
    let want = [[(c + k2) / det, c / det], [c / det, (c + k1) / det]];
    for (i, row) in want.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            assert!((g.get(i, j) - w).abs() < 1e-14);
        }
    }
    let chi = [-0.3, 0.1];
    let shifted = (c + k1 - chi[0]) * (c + k2 - chi[1]) - c * c;
    assert!((det_ratio(&net, &chi).unwrap() - det / shifted).abs() < 1e-12);
}

#[test]
fn single_vertex_green_is_inverse_killing() {
    let g = build_green(&Network::single(0.4).unwrap()).unwrap();
    assert!((g.get(0, 0) - 2.5).abs() < 1e-14);
}

/// `sum_sigma alpha^{cycles(sigma)} prod_i M[i][sigma(i)]` over all
/// permutations, enumerated by Heap's algorithm.
fn alpha_permanent(m: &[Vec<f64>], alpha: f64) -> f64 {
    let n = m.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    let term = |p: &[usize]| {
        let mut seen = vec![false; n];
        let mut cycles = 0;
        for s in 0..n {
            if !seen[s] {
                cycles += 1;
                let mut i = s;
                while !seen[i] {
                    seen[i] = true;
                    i = p[i];
                }
            }
        }
        alpha.powi(cycles) * (0..n).map(|i| m[i][p[i]]).product::<f64>()
    };
    let mut total = term(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            total += term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

#[test]
fn permanental_moments_match_cycle_expansion() {
    let net = Network::cycle(4, 1.0, vec![0.5, 0.0, 0.3, 0.2]).unwrap();
    let g = build_green(&net).unwrap();
    for points in [vec![0], vec![1, 1], vec![0, 2], vec![0, 1, 3], vec![2, 2, 3, 0]] {
        let m: Vec<Vec<f64>> = points.iter().map(|&x| points.iter().map(|&y| g.get(x, y)).collect()).collect();
        for alpha in [0.5, 1.0, 1.75] {
            let want = alpha_permanent(&m, alpha);
            let got = permanental_moment(&g, &points, alpha).unwrap();
            assert!((got - want).abs() < 1e-10 * want, "{points:?} alpha={alpha}");
        }
    }
}

#[test]
fn exact_and_float_halfline_agree() {
    use dyson_iso::algebra::rat;
    use dyson_iso::pnu::eval_halfline_exact;
    for nu in even_families(6).into_iter().filter(|nu| nu.len() <= 3) {
        let pts: Vec<_> = [rat(1, 4), rat(1, 2), rat(3, 2)][..nu.len()].to_vec();
        let floats: Vec<f64> = pts.iter().map(rational_to_f64).collect();
        let exact = eval_halfline_exact(&nu, &rat(5, 2), &int(3), &pts).unwrap();
        let got = eval_halfline(&nu, 2.5, 3.0, &floats).unwrap();
        let want = rational_to_f64(&exact);
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "nu={nu}");
    }
}
