//! Closed forms: Wick and permanent expressions for `P_(1,...,1)` and
//! `P_(2,...,2)`, the Gaussian form at `beta = -2/n`, and the two-particle
//! polynomial `P-hat` in pair variables.

use super::{PnuError, PnuPolynomial};
use crate::algebra::{
    for_each_pair_partition, int, perm_alpha, rat, CoefPoly, FormalPoly, Monomial, Rational,
    SquareMatrix, Var,
};
use crate::gbe::IndexFamily;
use std::collections::{BTreeMap, HashMap};

/// Largest `|nu|` accepted by [`build_pnu_hat_n2`].
pub const MAX_HAT_DEGREE: u32 = 16;

/// `M(k,l)`: `Y(k,k)` on the diagonal, `Y(k,k) Yc(k,k+1) ... Yc(l-1,l)`
/// above it (1-based, symmetric).
pub fn m_entry(k: u32, l: u32) -> FormalPoly {
    let (a, b) = if k <= l { (k, l) } else { (l, k) };
    let pairs = std::iter::once((Var::Diag(a), 1)).chain((a + 1..=b).map(|r| (Var::Check(r), 1)));
    FormalPoly::term(CoefPoly::one(), Monomial::from_pairs(pairs))
}

fn ones(m: usize) -> Result<IndexFamily, PnuError> {
    IndexFamily::new(vec![1; m]).map_err(|e| PnuError::InvalidParameter(e.to_string()))
}

/// `n^{m/2}` times the sum over pair partitions of `[1,m]` of `prod M(a,b)`.
pub fn closed_form_ones(m: usize) -> Result<PnuPolynomial, PnuError> {
    if m % 2 == 1 {
        return Err(PnuError::OddDegree(m as u32));
    }
    let mut sum = FormalPoly::zero();
    let points: Vec<u32> = (1..=m as u32).collect();
    for_each_pair_partition(&points, |pairs| {
        let mut t = FormalPoly::one();
        for &(a, b) in pairs {
            t = &t * &m_entry(a, b);
        }
        sum = &sum + &t;
    });
    let poly = sum.scale(&CoefPoly::n().pow(m as u32 / 2));
    Ok(PnuPolynomial { nu: ones(m)?, poly })
}

/// `2^m Perm_{d/2}(M)`.
pub fn closed_form_twos(m: usize) -> Result<PnuPolynomial, PnuError> {
    if m == 0 {
        return Err(PnuError::InvalidParameter("m must be at least 1".into()));
    }
    let matrix = SquareMatrix::from_fn(m, |i, j| m_entry(i as u32 + 1, j as u32 + 1));
    let alpha = FormalPoly::constant(CoefPoly::dimension().scale(&rat(1, 2)));
    let perm = perm_alpha(&matrix, &alpha)?;
    let poly = perm.scale_rational(&int(1 << m));
    let nu = IndexFamily::new(vec![2; m]).map_err(|e| PnuError::InvalidParameter(e.to_string()))?;
    Ok(PnuPolynomial { nu, poly })
}

/// `k_nu`: position `a` in `1..=|nu|` to the index of the block holding it.
fn block_map(nu: &IndexFamily) -> Vec<u32> {
    nu.entries()
        .iter()
        .enumerate()
        .flat_map(|(k, &v)| std::iter::repeat_n(k as u32 + 1, v as usize))
        .collect()
}

/// Sum over pair partitions of `[1,|nu|]` of `prod M(k(a), k(b))`, with
/// the pairing product built by `entry`.
fn pairing_sum(blocks: &[u32], entry: impl Fn(u32, u32) -> FormalPoly) -> FormalPoly {
    let mut sum = FormalPoly::zero();
    for_each_pair_partition(blocks, |pairs| {
        let mut t = FormalPoly::one();
        for &(a, b) in pairs {
            t = &t * &entry(a, b);
        }
        sum = &sum + &t;
    });
    sum
}

/// The Gaussian form of `P_nu` at `beta = -2/n`, `n = n0`:
/// `n0^{m - |nu|/2} sum_{pairings} prod M(k(a), k(b))`. Coefficients are
/// rational constants since the power of `n0` may be negative.
pub fn wick_form(nu: &IndexFamily, n0: &Rational) -> Result<FormalPoly, PnuError> {
    if nu.size() % 2 == 1 {
        return Err(PnuError::OddDegree(nu.size()));
    }
    if *n0 == int(0) {
        return Err(PnuError::InvalidParameter("n must be nonzero".into()));
    }
    let sum = pairing_sum(&block_map(nu), m_entry);
    let e = nu.len() as i32 - (nu.size() / 2) as i32;
    Ok(sum.scale_rational(&n0.pow(e)))
}

/// Evaluates `P_nu` at `beta = -2/n0` under a numeric substitution and the
/// independent Wick value `n0^{m - |nu|/2} E[prod phi(x_k)^{nu_k}]`, where
/// `cov` is the covariance of the Gaussian field at the points.
pub fn specialize_beta_minus_2_over_n(
    nu: &IndexFamily,
    n0: u32,
    points: &[f64],
    substitution: super::Substitution,
) -> Result<(f64, f64), PnuError> {
    if n0 == 0 {
        return Err(PnuError::InvalidParameter("n must be positive".into()));
    }
    let p = super::build_pnu(nu)?;
    let n = f64::from(n0);
    let beta = -2.0 / n;
    let value = super::eval_points(&p, beta, n, points, substitution)?;
    let cov = |i: usize, j: usize| substitution.covariance(points[i], points[j]);
    let blocks: Vec<usize> = block_map(nu).iter().map(|&k| k as usize - 1).collect();
    let mut wick = 0.0;
    for_each_pair_partition(&blocks, |pairs| {
        wick += pairs.iter().map(|&(a, b)| cov(a, b)).product::<f64>();
    });
    let e = nu.len() as i32 - (nu.size() / 2) as i32;
    Ok((value, n.powi(e) * wick))
}

/// Two-particle structure: the index map, the admissible subsets and
/// `P-hat` in the pair variables `Y(k,l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuHat {
    pub nu: IndexFamily,
    /// `k_nu(a)` for `a = 1..=|nu|` (stored 0-based by position).
    pub block_of: Vec<u32>,
    /// Members of `I_nu` as bitmasks over positions `0..|nu|`.
    pub subsets: Vec<u32>,
    pub hat: FormalPoly,
    /// `P-hat` after `Y(k,l) -> Y(k,k) Yc(k,k+1) ... Yc(l-1,l)`.
    pub chained: FormalPoly,
}

/// Replaces each pair variable `Y(k,l)`, `k < l`, by the chain `M(k,l)`.
pub fn chain_substitute(p: &FormalPoly) -> FormalPoly {
    let bindings: BTreeMap<Var, FormalPoly> = p
        .variables()
        .into_iter()
        .filter_map(|v| match v {
            Var::Pair(k, l) => Some((v, m_entry(k, l))),
            _ => None,
        })
        .collect();
    p.substitute(&bindings)
}

/// `Perm_{(beta+1)/2}` of `(Y(f(i), f(j)))` where block `k` appears
/// `counts[k]` times.
fn frak_p(counts: &[u32]) -> Result<FormalPoly, PnuError> {
    let f: Vec<u32> = counts
        .iter()
        .enumerate()
        .flat_map(|(k, &c)| std::iter::repeat_n(k as u32 + 1, c as usize))
        .collect();
    if f.is_empty() {
        return Ok(FormalPoly::one());
    }
    let matrix = SquareMatrix::from_fn(f.len(), |i, j| FormalPoly::var(Var::y(f[i], f[j])));
    let alpha = FormalPoly::constant(&(&CoefPoly::beta() + &CoefPoly::one()) * &CoefPoly::constant(rat(1, 2)));
    Ok(perm_alpha(&matrix, &alpha)?)
}

pub fn build_pnu_hat_n2(nu: &IndexFamily) -> Result<NuHat, PnuError> {
    let size = nu.size();
    if size % 2 == 1 {
        return Err(PnuError::OddDegree(size));
    }
    if size > MAX_HAT_DEGREE {
        return Err(PnuError::TooLarge { size, limit: MAX_HAT_DEGREE });
    }
    let m = nu.len();
    let blocks = block_map(nu);
    let mut subsets = Vec::new();
    // Both factors depend on I only through how many members it takes
    // from each block, so subsets are grouped by that count vector.
    let mut by_counts: HashMap<Vec<u32>, (u64, u32)> = HashMap::new();
    for mask in 0u32..(1u32 << size) {
        let mut taken = vec![0u32; m];
        for (a, &k) in blocks.iter().enumerate() {
            if mask & (1 << a) != 0 {
                taken[k as usize - 1] += 1;
            }
        }
        let admissible = nu.entries().iter().zip(&taken).all(|(&v, &t)| (v - t) % 2 == 0);
        if admissible {
            subsets.push(mask);
            by_counts.entry(taken).or_insert((0, mask)).0 += 1;
        }
    }
    let mut keys: Vec<_> = by_counts.into_iter().collect();
    keys.sort();
    let mut hat = FormalPoly::zero();
    for (taken, (multiplicity, mask)) in keys {
        let members: Vec<u32> = (0..size as usize)
            .filter(|a| mask & (1 << a) != 0)
            .map(|a| blocks[a])
            .collect();
        let pairs = pairing_sum(&members, |a, b| FormalPoly::var(Var::y(a, b)));
        let left: Vec<u32> = nu.entries().iter().zip(&taken).map(|(&v, &t)| (v - t) / 2).collect();
        let weight = Rational::from_integer(2.into()).pow(m as i32 - members.len() as i32 / 2)
            * int(multiplicity as i64);
        hat = &hat + &(&pairs * &frak_p(&left)?).scale_rational(&weight);
    }
    let chained = chain_substitute(&hat);
    Ok(NuHat { nu: nu.clone(), block_of: blocks, subsets, hat, chained })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(v: &[u32]) -> IndexFamily {
        IndexFamily::new(v.to_vec()).unwrap()
    }

    #[test]
    fn chain_entries() {
        assert_eq!(m_entry(2, 2), "Y(2,2)".parse().unwrap());
        assert_eq!(m_entry(3, 1), "Y(1,1)*Yc(1,2)*Yc(2,3)".parse().unwrap());
    }

    #[test]
    fn hat_for_two() {
        let h = build_pnu_hat_n2(&fam(&[2])).unwrap();
        assert_eq!(h.subsets, vec![0b00, 0b11]);
        assert_eq!(h.hat, "(beta + 2)*Y(1,1)".parse().unwrap());
    }

    #[test]
    fn hat_for_one_one() {
        let h = build_pnu_hat_n2(&fam(&[1, 1])).unwrap();
        assert_eq!(h.subsets, vec![0b11]);
        assert_eq!(h.hat, "2*Y(1,2)".parse().unwrap());
        assert_eq!(h.chained, "2*Y(1,1)*Yc(1,2)".parse().unwrap());
    }

    #[test]
    fn hat_size_guard() {
        assert!(matches!(
            build_pnu_hat_n2(&fam(&[9, 9])),
            Err(PnuError::TooLarge { .. })
        ));
    }
}
