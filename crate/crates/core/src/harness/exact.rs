//! Exact symbolic suites: the appendix table and structural properties of
//! `P_nu`.

use super::golden::{parse_golden, GoldenEntry, APPENDIX};
use super::{CheckRecord, Group, HarnessError, RunConfig};
use crate::algebra::{int, perm_alpha, rat, Rational, SquareMatrix};
use crate::gbe::{sd_moment, IndexFamily};
use crate::pnu::{
    build_pnu, build_pnu_hat_n2, check_degree_identities, check_free_part_degrees, closed_form_ones,
    closed_form_twos, eval_halfline_exact, families_of_size, wick_form, PnuError,
};
use std::collections::BTreeMap;

pub(super) fn appendix_golden(cfg: &RunConfig) -> Result<Vec<CheckRecord>, HarnessError> {
    let mut g = Group::new(cfg, "appendix-golden");
    for entry in parse_golden(APPENDIX)? {
        match entry {
            GoldenEntry::Moment { nu, value } => {
                let got = sd_moment(&nu);
                let detail = (got != value).then(|| format!("got {got}, want {value}"));
                g.exact(format!("moment {nu}"), "Schwinger-Dyson moment", got == value, detail);
            }
            GoldenEntry::Poly { nu, value } => {
                let name = format!("poly {nu}");
                match build_pnu(&nu) {
                    Ok(p) => {
                        let detail = (p.poly != value).then(|| format!("got {}, want {value}", p.poly));
                        g.exact(name, "moment polynomial recursion", p.poly == value, detail);
                    }
                    Err(e) => g.fail(name, "moment polynomial recursion", e.to_string()),
                }
            }
        }
    }
    Ok(g.finish())
}

/// Largest `|nu|` covered by the structural checks.
const STRUCTURE_MAX: u32 = 8;
/// Largest `|nu|` covered by the Gaussian specialization.
const WICK_MAX: u32 = 6;
/// Leading entries, sorted tail and projection order.
type ProjectionClass = (Vec<u32>, Vec<u32>, u32);

fn even_families(max: u32) -> Vec<IndexFamily> {
    (1..=max / 2).flat_map(|h| families_of_size(2 * h)).collect()
}

pub(super) fn pnu_properties(cfg: &RunConfig) -> Result<Vec<CheckRecord>, String> {
    let mut g = Group::new(cfg, "pnu-properties");
    let all = even_families(STRUCTURE_MAX);
    let mut built = BTreeMap::new();
    for nu in &all {
        built.insert(nu.clone(), build_pnu(nu).map_err(|e| e.to_string())?);
    }

    for size in (2..=STRUCTURE_MAX).step_by(2) {
        let fams: Vec<_> = all.iter().filter(|nu| nu.size() == size).collect();
        let mut bad = Vec::new();
        for nu in &fams {
            let p = &built[*nu];
            if let Err(e) = check_degree_identities(p).and_then(|_| check_free_part_degrees(p)) {
                bad.push(e);
            }
        }
        let detail = format!("{} families{}", fams.len(), first_error(&bad));
        g.exact(format!("degree identities |nu|={size}"), "degree identities", bad.is_empty(), Some(detail));

        // Families sharing the first k-1 entries and the tail multiset must
        // have identical k-projections.
        let mut classes: BTreeMap<ProjectionClass, Vec<&IndexFamily>> = BTreeMap::new();
        for nu in &fams {
            for k in 2..=nu.len() as u32 {
                let (head, tail) = nu.entries().split_at(k as usize - 1);
                let mut tail = tail.to_vec();
                tail.sort_unstable();
                classes.entry((head.to_vec(), tail, k)).or_default().push(nu);
            }
        }
        let mut compared = 0;
        let mut bad = Vec::new();
        for ((_, _, k), members) in &classes {
            let first = built[members[0]].poly.k_project(*k);
            for other in &members[1..] {
                compared += 1;
                if built[*other].poly.k_project(*k) != first {
                    bad.push(format!("{} vs {} at k={k}", members[0], other));
                }
            }
        }
        let detail = format!("{compared} comparisons{}", first_error(&bad));
        g.exact(format!("tail symmetry |nu|={size}"), "tail-permutation symmetry", bad.is_empty(), Some(detail));

        let mut bad = Vec::new();
        for nu in &fams {
            match build_pnu_hat_n2(nu) {
                Ok(h) => {
                    if h.chained != built[*nu].poly.eval_n(&int(2)) {
                        bad.push(format!("{nu}"));
                    }
                }
                Err(e) => bad.push(format!("{nu}: {e}")),
            }
        }
        let detail = format!("{} families{}", fams.len(), first_error(&bad));
        g.exact(format!("two-particle form |nu|={size}"), "two-particle closed form", bad.is_empty(), Some(detail));
    }

    for m in [2usize, 4] {
        let nu = IndexFamily::new(vec![1; m]).map_err(|e| e.to_string())?;
        let ok = closed_form_ones(m).map_err(|e| e.to_string())?.poly == built[&nu].poly;
        g.exact(format!("closed form ones m={m}"), "Wick closed form", ok, None);
    }
    for m in 1..=4usize {
        let nu = IndexFamily::new(vec![2; m]).map_err(|e| e.to_string())?;
        let ok = closed_form_twos(m).map_err(|e| e.to_string())?.poly == built[&nu].poly;
        g.exact(format!("closed form twos m={m}"), "permanental closed form", ok, None);
    }

    for n0 in [1i64, 2, 3, 5] {
        let n = int(n0);
        let beta = rat(-2, n0);
        let mut bad = Vec::new();
        let fams = even_families(WICK_MAX);
        for nu in &fams {
            let want = wick_form(nu, &n).map_err(|e| e.to_string())?;
            if built[nu].poly.specialize(&beta, &n) != want {
                bad.push(format!("{nu}"));
            }
        }
        let detail = format!("{} families{}", fams.len(), first_error(&bad));
        g.exact(format!("gaussian specialization n={n0}"), "Gaussian specialization", bad.is_empty(), Some(detail));
    }

    // Half-line P_(2,...,2) / 2^m against Perm_{d/2}(2 min(x_i, x_j)).
    let points: Vec<Rational> = [rat(1, 3), rat(1, 2), rat(3, 2), rat(2, 1)].into();
    for (beta, n) in [(rat(1, 1), 3i64), (rat(5, 2), 2), (rat(-1, 2), 2)] {
        for m in 1..=points.len() {
            let nu = IndexFamily::new(vec![2; m]).map_err(|e| e.to_string())?;
            let x = &points[..m];
            let got = eval_halfline_exact(&nu, &beta, &int(n), x).map_err(|e: PnuError| e.to_string())?
                / int(1 << m);
            let d = int(n) + int(n * (n - 1)) * &beta / int(2);
            let gmat = SquareMatrix::from_fn(m, |i, j| int(2) * x[i].clone().min(x[j].clone()));
            let want = perm_alpha(&gmat, &(d / int(2))).map_err(|e| e.to_string())?;
            let detail = (got != want).then(|| format!("got {got}, want {want}"));
            g.exact(
                format!("permanental half-line beta={beta} n={n} m={m}"),
                "permanental occupation moments",
                got == want,
                detail,
            );
        }
    }
    Ok(g.finish())
}

fn first_error(bad: &[String]) -> String {
    match bad.first() {
        None => String::new(),
        Some(e) => format!(", {} failures, first: {e}", bad.len()),
    }
}
