use dyson_iso::algebra::{parse_rational, rat, CoefPoly, FormalPoly, Rational};
use dyson_iso::gbe::{sd_moment, IndexFamily, MomentCache};
use dyson_iso::harness::{RunConfig, SuiteId};
use dyson_iso::line::{solve_chi, PiecewiseConstChi};
use dyson_iso::network::{build_green, det_ratio, Network};
use dyson_iso::pnu::build_pnu;
use num_bigint::BigInt;
use proptest::prelude::*;

fn even_family(max_size: u32) -> impl Strategy<Value = IndexFamily> {
    prop::collection::vec(1u32..=4, 1..=4)
        .prop_filter("even size within bound", move |v| {
            let s: u32 = v.iter().sum();
            s.is_multiple_of(2) && s <= max_size
        })
        .prop_map(|v| IndexFamily::new(v).unwrap())
}

/// Paths and cycles with random conductances and a nonzero killing measure.
fn network() -> impl Strategy<Value = Network> {
    (1usize..=5, any::<bool>())
        .prop_flat_map(|(n, cycle)| {
            let edges = if cycle && n >= 3 { n } else { n - 1 };
            (Just(n), prop::collection::vec(0.1f64..3.0, edges), prop::collection::vec(0.0f64..2.0, n), 0..n)
        })
        .prop_map(|(n, cs, mut ks, pin)| {
            ks[pin] += 0.1;
            let edges = cs.into_iter().enumerate().map(|(i, c)| (i, (i + 1) % n, c)).collect();
            Network::new(n, edges, ks).unwrap()
        })
}

fn chi() -> impl Strategy<Value = PiecewiseConstChi> {
    prop::collection::vec((0.05f64..1.0, 0.0f64..3.0), 1..=4).prop_map(|steps| {
        let mut t = 0.0;
        let pieces = steps
            .into_iter()
            .map(|(dt, c)| {
                t += dt;
                (t, c)
            })
            .collect();
        PiecewiseConstChi::new(pieces).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn family_text_round_trip(v in prop::collection::vec(0u32..50, 0..12)) {
        match IndexFamily::new(v.clone()) {
            Ok(nu) => prop_assert_eq!(nu.to_string().parse::<IndexFamily>().unwrap(), nu),
            Err(_) => prop_assert!(v.contains(&0)),
        }
    }

    #[test]
    fn decimal_parse_is_exact(num in -10_000_000i64..10_000_000, scale in 0u32..6) {
        let digits = format!("{:0>width$}", num.unsigned_abs(), width = scale as usize + 1);
        let (whole, frac) = digits.split_at(digits.len() - scale as usize);
        let text = format!("{}{whole}{}{frac}", if num < 0 { "-" } else { "" }, if scale > 0 { "." } else { "" });
        let want = Rational::new(BigInt::from(num), BigInt::from(10u32).pow(scale));
        prop_assert_eq!(parse_rational(&text).unwrap(), want);
    }

    #[test]
    fn fraction_parse(num in -1000i64..1000, den in 1i64..1000) {
        prop_assert_eq!(parse_rational(&format!("{num}/{den}")).unwrap(), rat(num, den));
    }

    #[test]
    fn tail_permutation_symmetry(nu in even_family(6), seed in any::<u64>()) {
        let p = build_pnu(&nu).unwrap();
        for k in 2..=nu.len() {
            let mut entries = nu.entries().to_vec();
            // Deterministic shuffle of the tail after position k - 1.
            let tail = &mut entries[k - 1..];
            let len = tail.len();
            for i in (1..len).rev() {
                tail.swap(i, (seed.rotate_left(i as u32) % (i as u64 + 1)) as usize);
            }
            let q = build_pnu(&IndexFamily::new(entries).unwrap()).unwrap();
            prop_assert_eq!(p.poly.k_project(k as u32), q.poly.k_project(k as u32));
        }
    }

    #[test]
    fn polynomial_text_round_trip(nu in even_family(6)) {
        let p = build_pnu(&nu).unwrap().poly;
        prop_assert_eq!(p.to_string().parse::<FormalPoly>().unwrap(), p);
        let c = sd_moment(&nu);
        prop_assert_eq!(c.to_string().parse::<CoefPoly>().unwrap(), c);
    }

    #[test]
    fn moment_pivot_is_immaterial(nu in even_family(8)) {
        let want = sd_moment(&nu);
        for pivot in 0..nu.len() {
            prop_assert_eq!(&MomentCache::new().moment_with_pivot(&nu, pivot), &want);
        }
    }

    #[test]
    fn green_is_symmetric_positive_inverse(net in network()) {
        let g = build_green(&net).unwrap();
        prop_assert!(g.residual() < 1e-10);
        for i in 0..g.dim() {
            for j in 0..g.dim() {
                prop_assert_eq!(g.get(i, j), g.get(j, i));
                prop_assert!(g.get(i, j) > 0.0);
            }
            prop_assert!(g.get(i, i) >= g.get(i, (i + 1) % g.dim()));
        }
        prop_assert!((det_ratio(&net, &vec![0.0; net.len()]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_is_minus_laplacian_plus_killing(net in network(), f in prop::collection::vec(-3.0f64..3.0, 5)) {
        let f = &f[..net.len()];
        let lap = net.laplacian_apply(f);
        let op = net.operator();
        for x in 0..net.len() {
            let direct: f64 = (0..net.len()).map(|y| op[(x, y)] * f[y]).sum();
            prop_assert!((direct - (-lap[x] + net.killing()[x] * f[x])).abs() < 1e-12);
        }
    }

    #[test]
    fn network_json_round_trip(net in network()) {
        let text = serde_json::to_string(&net).unwrap();
        prop_assert_eq!(text.parse::<Network>().unwrap(), net);
    }

    #[test]
    fn tilt_invariants(chi in chi()) {
        let sol = solve_chi(&chi).unwrap();
        let end = chi.support_end();
        let mut prev_u = 1.0;
        let mut prev_psi = 0.0;
        for i in 1..=40 {
            let x = end * 1.25 * f64::from(i) / 40.0;
            let u = sol.u(x);
            prop_assert!(u > 0.0 && u <= prev_u + 1e-15);
            let psi = sol.psi(x);
            prop_assert!(psi > prev_psi);
            prop_assert!(sol.green(x, x) <= 2.0 * x * (1.0 + 1e-12));
            prev_u = u;
            prev_psi = psi;
        }
        prop_assert!((sol.u_inf() - sol.u(end + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn chi_text_and_json_round_trip(chi in chi()) {
        prop_assert_eq!(chi.to_string().parse::<PiecewiseConstChi>().unwrap(), chi.clone());
        let json = serde_json::to_string(&chi).unwrap();
        prop_assert_eq!(serde_json::from_str::<PiecewiseConstChi>(&json).unwrap(), chi);
    }

    #[test]
    fn run_config_json_round_trip(seed in any::<u64>(), samples in 2usize..1_000_000, z in 0.5f64..10.0, pick in 0usize..6) {
        let cfg = RunConfig { seed, samples, z_bound: z, suites: vec![SuiteId::ALL[pick]], ..RunConfig::default() };
        let json = serde_json::to_string(&cfg).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunConfig>(&json).unwrap(), cfg);
    }
}
