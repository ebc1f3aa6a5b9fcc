//! The formal polynomials `P_nu` whose substitutions give the symmetric
//! multi-point moments of beta-Dyson Brownian motion.
//!
//! `P_nu` is a polynomial in `Y(k,k)` (`1 <= k <= m`) and the chain
//! variables `Yc(k-1,k)` (`2 <= k <= m`) with coefficients in `beta`, `n`.
//! It is built level by level: the `k`-projection of `P_nu` is known up to
//! its `Y(k,k)`-free part from its `Y(k,k)`-derivative, which is a linear
//! combination of projections of polynomials of degree `|nu| - 2`; the free
//! part is then fixed by consistency with the `(k-1)`-projection.

mod closed;
mod eval;

pub use closed::{
    build_pnu_hat_n2, chain_substitute, closed_form_ones, closed_form_twos, m_entry,
    specialize_beta_minus_2_over_n, wick_form, NuHat, MAX_HAT_DEGREE,
};
pub use eval::{
    eval_chi, eval_halfline, eval_halfline_exact, eval_points, eval_stationary, Substitution,
};

use crate::algebra::{int, rat, AlgebraError, CoefPoly, FormalPoly, Monomial, Var};
use crate::gbe::{IndexFamily, MomentCache};
use crate::line::LineError;
use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PnuError {
    #[error("|nu| = {0} is odd; P_nu is only defined for even total degree")]
    OddDegree(u32),
    #[error("projection level {k} outside 1..={m}")]
    ProjectionOutOfRange { k: u32, m: u32 },
    #[error("expected {expected} points, got {got}")]
    PointCount { expected: usize, got: usize },
    #[error("points must be ascending{0}")]
    Unordered(String),
    #[error("{0}")]
    InvalidParameter(String),
    #[error("|nu| = {size} exceeds the limit {limit}")]
    TooLarge { size: u32, limit: u32 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Line(#[from] LineError),
}

/// `P_nu` together with its family.
#[derive(Debug, Clone, PartialEq)]
pub struct PnuPolynomial {
    pub nu: IndexFamily,
    pub poly: FormalPoly,
}

impl PnuPolynomial {
    pub fn m(&self) -> u32 {
        self.nu.len() as u32
    }

    pub fn project(&self, k: u32) -> Result<FormalPoly, PnuError> {
        k_project(self, k)
    }
}

/// `P^{k<-}`: `Y(j,j) -> Y(k,k)` and `Yc(j-1,j) -> 1` for all `j > k`.
pub fn k_project(p: &PnuPolynomial, k: u32) -> Result<FormalPoly, PnuError> {
    let m = p.m();
    if k == 0 || k > m {
        return Err(PnuError::ProjectionOutOfRange { k, m });
    }
    Ok(p.poly.k_project(k))
}

/// Memo tables for `P_nu`: one keyed on the ordered family, one on
/// `(prefix, sorted tail, k)` for projections.
#[derive(Debug, Default)]
pub struct PnuBuilder {
    moments: MomentCache,
    full: RwLock<HashMap<Vec<u32>, FormalPoly>>,
    projected: RwLock<HashMap<(Vec<u32>, u32), FormalPoly>>,
}

impl PnuBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn global() -> &'static PnuBuilder {
        static B: OnceLock<PnuBuilder> = OnceLock::new();
        B.get_or_init(PnuBuilder::new)
    }

    pub fn build(&self, nu: &IndexFamily) -> Result<PnuPolynomial, PnuError> {
        if nu.size() % 2 == 1 {
            return Err(PnuError::OddDegree(nu.size()));
        }
        Ok(PnuPolynomial { nu: nu.clone(), poly: self.full(nu.entries()) })
    }

    fn full(&self, nu: &[u32]) -> FormalPoly {
        if let Some(p) = self.full.read().expect("pnu cache poisoned").get(nu) {
            return p.clone();
        }
        let p = self.construct(nu);
        self.full
            .write()
            .expect("pnu cache poisoned")
            .entry(nu.to_vec())
            .or_insert(p)
            .clone()
    }

    /// `P_nu^{k<-}`, using tail symmetry to share work between families
    /// that differ only by the order of entries `k..m`.
    fn projected(&self, nu: &[u32], k: u32) -> FormalPoly {
        let split = (k as usize - 1).min(nu.len());
        let mut key = nu.to_vec();
        key[split..].sort_unstable_by(|a, b| b.cmp(a));
        let cache_key = (key, k);
        if let Some(p) = self.projected.read().expect("pnu cache poisoned").get(&cache_key) {
            return p.clone();
        }
        let p = self.full(&cache_key.0).k_project(k);
        self.projected
            .write()
            .expect("pnu cache poisoned")
            .entry(cache_key)
            .or_insert(p)
            .clone()
    }

    fn construct(&self, nu: &[u32]) -> FormalPoly {
        let m = nu.len() as u32;
        let family = IndexFamily::new(nu.to_vec()).expect("entries are positive");
        let c = self.moments.moment(&family);
        let mut level = FormalPoly::term(c, Monomial::from_pairs([(Var::Diag(1), family.size() / 2)]));
        for k in 2..=m {
            let rhs = self.derivative_rhs(nu, k);
            let with_y = rhs.antiderivative(Var::Diag(k));
            let tail: u32 = nu[k as usize - 1..].iter().sum();
            let free = &(&level - &with_y.k_project(k - 1)) * &FormalPoly::var(Var::Check(k)).pow(tail);
            level = &with_y + &free;
        }
        level
    }

    /// Right-hand side of the `Y(k,k)`-derivative of `P_nu^{k<-}`.
    fn derivative_rhs(&self, nu: &[u32], k: u32) -> FormalPoly {
        let half_beta = CoefPoly::beta().scale(&rat(1, 2));
        let one_minus = &CoefPoly::one() - &half_beta;
        let n = CoefPoly::n();
        let start = k as usize - 1;
        let mut out = FormalPoly::zero();
        let mut add = |coef: CoefPoly, fam: Vec<u32>| {
            let p = self.projected(&fam, k);
            out = &out + &p.scale(&coef);
        };
        let without = |idx: &[usize]| -> Vec<u32> {
            nu.iter()
                .enumerate()
                .filter(|(i, _)| !idx.contains(i))
                .map(|(_, &v)| v)
                .collect()
        };

        for (a, &v) in nu.iter().enumerate().skip(start) {
            let vi = i64::from(v);
            if v > 2 {
                for i in 2..=v - 2 {
                    let mut f = without(&[a]);
                    f.push(i - 1);
                    f.push(v - 1 - i);
                    add(half_beta.scale(&rat(vi, 2)), f);
                }
                let mut f = without(&[a]);
                f.push(v - 2);
                let coef = &(&half_beta * &n).scale(&int(vi)) + &one_minus.scale(&rat(vi * (vi - 1), 2));
                add(coef, f);
            } else if v == 2 {
                let coef = &(&half_beta * &n.pow(2)) + &(&one_minus * &n);
                add(coef, without(&[a]));
            }
        }
        for a in start..nu.len() {
            for b in a + 1..nu.len() {
                let (v, w) = (nu[a], nu[b]);
                if v + w > 2 {
                    let mut f = without(&[a, b]);
                    f.push(v + w - 2);
                    add(CoefPoly::from_int(i64::from(v) * i64::from(w)), f);
                } else {
                    add(n.clone(), without(&[a, b]));
                }
            }
        }
        out
    }
}

pub fn build_pnu(nu: &IndexFamily) -> Result<PnuPolynomial, PnuError> {
    PnuBuilder::global().build(nu)
}

/// Checks the degree identities of every monomial: for `k >= 2`,
/// `deg Yc(k-1,k) + 2 sum_{j>=k} deg Y(j,j) = sum_{j>=k} nu_j`, and
/// `2 sum_j deg Y(j,j) = |nu|`.
pub fn check_degree_identities(p: &PnuPolynomial) -> Result<(), String> {
    let nu = p.nu.entries();
    let m = nu.len();
    for (mono, _) in p.poly.terms() {
        let diag = |j: usize| mono.degree(Var::Diag(j as u32));
        let total: u32 = (1..=m).map(diag).sum();
        if 2 * total != p.nu.size() {
            return Err(format!("{}: monomial {mono} has Y-degree {total}", p.nu));
        }
        for k in 2..=m {
            let lhs = mono.degree(Var::Check(k as u32)) + 2 * (k..=m).map(diag).sum::<u32>();
            let rhs: u32 = nu[k - 1..].iter().sum();
            if lhs != rhs {
                return Err(format!("{}: monomial {mono} breaks the level-{k} identity", p.nu));
            }
        }
        for v in mono.factors() {
            let ok = match v.0 {
                Var::Diag(j) => (1..=m as u32).contains(&j),
                Var::Check(j) => (2..=m as u32).contains(&j),
                Var::Pair(..) => false,
            };
            if !ok {
                return Err(format!("{}: unexpected variable {}", p.nu, v.0));
            }
        }
    }
    Ok(())
}

/// Each monomial of `P^{k<-}(Y(k,k) = 0)` has `Yc(k-1,k)`-degree equal to
/// the tail sum `sum_{r>=k} nu_r`.
pub fn check_free_part_degrees(p: &PnuPolynomial) -> Result<(), String> {
    let nu = p.nu.entries();
    for k in 2..=nu.len() as u32 {
        let tail: u32 = nu[k as usize - 1..].iter().sum();
        let free = p.poly.k_project(k).set_zero(Var::Diag(k));
        for (mono, _) in free.terms() {
            if mono.degree(Var::Check(k)) != tail {
                return Err(format!("{}: level {k} free monomial {mono}", p.nu));
            }
        }
    }
    Ok(())
}

/// All ordered families with total degree `size` (compositions).
pub fn families_of_size(size: u32) -> Vec<IndexFamily> {
    fn rec(left: u32, cur: &mut Vec<u32>, out: &mut Vec<IndexFamily>) {
        if left == 0 {
            out.push(IndexFamily::new(cur.clone()).expect("positive"));
            return;
        }
        for v in 1..=left {
            cur.push(v);
            rec(left - v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size > 0 {
        rec(size, &mut Vec::new(), &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(v: &[u32]) -> IndexFamily {
        IndexFamily::new(v.to_vec()).unwrap()
    }

    fn poly(s: &str) -> FormalPoly {
        s.parse().unwrap()
    }

    #[test]
    fn base_cases() {
        assert_eq!(build_pnu(&fam(&[2])).unwrap().poly, poly("(1/2*beta*n^2 - 1/2*beta*n + n)*Y(1,1)"));
        assert_eq!(build_pnu(&fam(&[1, 1])).unwrap().poly, poly("n*Y(1,1)*Yc(1,2)"));
        assert!(matches!(build_pnu(&fam(&[1, 2])), Err(PnuError::OddDegree(3))));
    }

    #[test]
    fn p_121_has_a_single_monomial() {
        let want = poly("(1/2*beta*n^3 + (1 - 1/2*beta)*n^2 + 2*n)*Y(1,1)*Yc(1,2)*Y(2,2)*Yc(2,3)");
        assert_eq!(build_pnu(&fam(&[1, 2, 1])).unwrap().poly, want);
    }

    #[test]
    fn projection_range() {
        let p = build_pnu(&fam(&[2, 1, 1])).unwrap();
        assert!(k_project(&p, 0).is_err());
        assert!(k_project(&p, 4).is_err());
        assert_eq!(k_project(&p, 3).unwrap(), p.poly);
        let c = crate::gbe::sd_moment(&fam(&[2, 1, 1]));
        assert_eq!(
            k_project(&p, 1).unwrap(),
            FormalPoly::term(c, Monomial::from_pairs([(Var::Diag(1), 2)]))
        );
    }

    #[test]
    fn compositions() {
        assert_eq!(families_of_size(4).len(), 8);
        assert_eq!(families_of_size(0).len(), 0);
    }
}
