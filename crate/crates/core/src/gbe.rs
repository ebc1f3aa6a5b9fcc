//! Gaussian beta ensemble: exact power-sum moments from the loop
//! equation, the tridiagonal sampler, and the one-site Gamma identity.

use crate::algebra::{int, rat, rational_to_f64, CoefPoly, Rational};
use crate::rng;
use crate::stats::{self, Estimate};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{OnceLock, RwLock};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GbeError {
    #[error("index family entries must be positive integers: {0}")]
    BadFamily(String),
    #[error("sampler needs beta >= 0, got {0}")]
    NegativeBeta(f64),
    #[error("ensemble size must be at least 1")]
    EmptyEnsemble,
    #[error("odd total degree {0}")]
    OddDegree(u32),
}

/// Ordered family `nu = (nu_1, ..., nu_m)` of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct IndexFamily(Vec<u32>);

impl IndexFamily {
    pub fn new(entries: Vec<u32>) -> Result<Self, GbeError> {
        if entries.contains(&0) {
            return Err(GbeError::BadFamily(format!("{entries:?}")));
        }
        Ok(Self(entries))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// Number of entries `m(nu)`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `|nu|`.
    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Sorted-descending copy; the moment depends only on this.
    pub fn canonical(&self) -> Self {
        let mut v = self.0.clone();
        v.sort_unstable_by(|a, b| b.cmp(a));
        Self(v)
    }
}

impl TryFrom<Vec<u32>> for IndexFamily {
    type Error = GbeError;
    fn try_from(v: Vec<u32>) -> Result<Self, GbeError> {
        Self::new(v)
    }
}

impl From<IndexFamily> for Vec<u32> {
    fn from(f: IndexFamily) -> Vec<u32> {
        f.0
    }
}

impl fmt::Display for IndexFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Accepts `2,1,1`, `(2,1,1)`, `()` or the empty string.
impl FromStr for IndexFamily {
    type Err = GbeError;
    fn from_str(s: &str) -> Result<Self, GbeError> {
        let t = s.trim();
        let t = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .unwrap_or(t)
            .trim();
        if t.is_empty() {
            return Ok(Self::empty());
        }
        if t.len() > 4096 {
            return Err(GbeError::BadFamily("too long".into()));
        }
        let entries = t
            .split(',')
            .map(|p| p.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| GbeError::BadFamily(format!("{s:?}: {e}")))?;
        // Entries beyond this make every downstream computation infeasible.
        if entries.iter().any(|&e| e > 1 << 16) {
            return Err(GbeError::BadFamily(format!("{s:?}: entry too large")));
        }
        Self::new(entries)
    }
}

/// Memo table for `c(nu, beta, n)`, keyed by the sorted family.
#[derive(Debug, Default)]
pub struct MomentCache {
    table: RwLock<HashMap<Vec<u32>, CoefPoly>>,
}

impl MomentCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by [`sd_moment`].
    pub fn global() -> &'static MomentCache {
        static CACHE: OnceLock<MomentCache> = OnceLock::new();
        CACHE.get_or_init(MomentCache::new)
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("moment cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn moment(&self, nu: &IndexFamily) -> CoefPoly {
        let key = nu.canonical().0;
        self.moment_sorted(&key)
    }

    fn moment_sorted(&self, key: &[u32]) -> CoefPoly {
        if key.iter().sum::<u32>() % 2 == 1 {
            return CoefPoly::zero();
        }
        if key.is_empty() {
            return CoefPoly::one();
        }
        if let Some(c) = self.table.read().expect("moment cache poisoned").get(key) {
            return c.clone();
        }
        let value = self.unroll(key, key.len() - 1);
        self.table
            .write()
            .expect("moment cache poisoned")
            .entry(key.to_vec())
            .or_insert(value)
            .clone()
    }

    /// One step of the loop equation pivoting on `nu[pivot]`.
    fn unroll(&self, nu: &[u32], pivot: usize) -> CoefPoly {
        let q = nu[pivot];
        let rest: Vec<u32> = nu
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != pivot)
            .map(|(_, &v)| v)
            .collect();
        let half_beta = CoefPoly::beta().scale(&rat(1, 2));
        let one_minus = &CoefPoly::one() - &half_beta;
        let mut out = CoefPoly::zero();

        let mut split = CoefPoly::zero();
        for i in 1..q {
            split = &split + &self.family(&rest, &[i - 1, q - 1 - i]);
        }
        out = &out + &(&half_beta * &split);

        if q >= 2 {
            let t = self.family(&rest, &[q - 2]).scale(&int(i64::from(q) - 1));
            out = &out + &(&one_minus * &t);
        }

        for (k, &v) in rest.iter().enumerate() {
            let mut others = rest.clone();
            others.remove(k);
            let t = self.family(&others, &[v + q - 2]).scale(&int(i64::from(v)));
            out = &out + &t;
        }
        out
    }

    /// Moment of `rest` with `extra` appended; zero entries are `p_0 = n`.
    fn family(&self, rest: &[u32], extra: &[u32]) -> CoefPoly {
        let mut v: Vec<u32> = rest.to_vec();
        let mut zeros = 0;
        for &e in extra {
            if e == 0 {
                zeros += 1;
            } else {
                v.push(e);
            }
        }
        v.sort_unstable_by(|a, b| b.cmp(a));
        let c = self.moment_sorted(&v);
        if zeros == 0 {
            c
        } else {
            &c * &CoefPoly::n().pow(zeros)
        }
    }

    /// The loop equation unrolled at an arbitrary pivot. Equal to
    /// [`MomentCache::moment`] for every pivot.
    pub fn moment_with_pivot(&self, nu: &IndexFamily, pivot: usize) -> CoefPoly {
        assert!(pivot < nu.len(), "pivot out of range");
        if nu.size() % 2 == 1 {
            return CoefPoly::zero();
        }
        self.unroll(&nu.0, pivot)
    }
}

/// `c(nu, beta, n) = <p_nu(lambda)>_{beta,n}` as a polynomial in `beta`, `n`.
pub fn sd_moment(nu: &IndexFamily) -> CoefPoly {
    MomentCache::global().moment(nu)
}

pub fn sd_moment_eval(nu: &IndexFamily, beta: &Rational, n: &Rational) -> Rational {
    sd_moment(nu).eval_rational(beta, n)
}

/// One draw from the ensemble, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbeSample {
    pub eigenvalues: Vec<f64>,
    pub beta: f64,
}

impl GbeSample {
    pub fn power_sum(&self, q: u32) -> f64 {
        power_sum(&self.eigenvalues, q)
    }
}

pub fn power_sum(lambda: &[f64], q: u32) -> f64 {
    lambda.iter().map(|l| l.powi(q as i32)).sum()
}

/// `p_nu(lambda) = prod_k p_{nu_k}(lambda)`.
pub fn power_sum_family(lambda: &[f64], nu: &[u32]) -> f64 {
    nu.iter().map(|&q| power_sum(lambda, q)).product()
}

/// Tridiagonal model: diagonal `N(0,1)`, off-diagonal `chi_{beta(n-j)}/sqrt 2`.
pub fn sample_gbe<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<GbeSample, GbeError> {
    if n == 0 {
        return Err(GbeError::EmptyEnsemble);
    }
    if beta.is_nan() || beta < 0.0 {
        return Err(GbeError::NegativeBeta(beta));
    }
    let diag: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let off: Vec<f64> = (1..n)
        .map(|j| chi(beta * (n - j) as f64, rng) / std::f64::consts::SQRT_2)
        .collect();
    let mut eigenvalues = tridiagonal_eigenvalues(&diag, &off);
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(GbeSample { eigenvalues, beta })
}

fn chi<R: Rng + ?Sized>(df: f64, rng: &mut R) -> f64 {
    if df <= 0.0 {
        return 0.0;
    }
    let g = Gamma::new(df / 2.0, 1.0).expect("positive shape");
    (2.0 * g.sample(rng)).sqrt()
}

fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    match diag.len() {
        1 => vec![diag[0]],
        2 => {
            let mid = 0.5 * (diag[0] + diag[1]);
            let r = (0.25 * (diag[0] - diag[1]).powi(2) + off[0] * off[0]).sqrt();
            vec![mid + r, mid - r]
        }
        n => {
            let m = DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    diag[i]
                } else if i + 1 == j {
                    off[i]
                } else if j + 1 == i {
                    off[j]
                } else {
                    0.0
                }
            });
            SymmetricEigen::new(m).eigenvalues.iter().copied().collect()
        }
    }
}

/// Monte Carlo check of `<p_nu e^{-K p_2/2}> = c(nu) (K+1)^{-(d+|nu|)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCheck {
    pub nu: IndexFamily,
    pub beta: f64,
    pub n: usize,
    pub k: f64,
    pub estimate: f64,
    pub exact: f64,
    pub stderr: f64,
    pub zscore: f64,
    pub samples: usize,
    pub seed: u64,
}

pub fn gamma_identity_check(
    nu: &IndexFamily,
    beta: &Rational,
    n: usize,
    k: f64,
    samples: usize,
    seed: u64,
) -> Result<GammaCheck, GbeError> {
    if nu.size() % 2 == 1 {
        return Err(GbeError::OddDegree(nu.size()));
    }
    let beta_f = rational_to_f64(beta);
    if beta_f.is_nan() || beta_f < 0.0 {
        return Err(GbeError::NegativeBeta(beta_f));
    }
    let n_rat = int(n as i64);
    let c = rational_to_f64(&sd_moment_eval(nu, beta, &n_rat));
    let d = rational_to_f64(&CoefPoly::dimension().eval_rational(beta, &n_rat));
    let exact = c * (k + 1.0).powf(-(d + f64::from(nu.size())) / 2.0);
    let values = rng::replicas(seed, samples, |r| {
        let s = sample_gbe(n, beta_f, r).expect("validated");
        power_sum_family(&s.eigenvalues, nu.entries()) * (-0.5 * k * s.power_sum(2)).exp()
    });
    let Estimate { value, stderr, .. } = stats::mean_estimate(&values);
    Ok(GammaCheck {
        nu: nu.clone(),
        beta: beta_f,
        n,
        k,
        estimate: value,
        exact,
        stderr,
        zscore: stats::z_score(value, exact, stderr),
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(v: &[u32]) -> IndexFamily {
        IndexFamily::new(v.to_vec()).unwrap()
    }

    #[test]
    fn low_order_moments() {
        assert_eq!(sd_moment(&fam(&[2])), CoefPoly::dimension());
        assert_eq!(sd_moment(&fam(&[1, 1])), CoefPoly::n());
        assert!(sd_moment(&fam(&[3])).is_zero());
        assert_eq!(sd_moment(&IndexFamily::empty()), CoefPoly::one());
        let d = CoefPoly::dimension();
        assert_eq!(sd_moment(&fam(&[2, 2])), &d * &(&d + &CoefPoly::from_int(2)));
    }

    #[test]
    fn every_pivot_gives_the_same_moment() {
        let cache = MomentCache::new();
        for v in [&[3, 1, 2, 2][..], &[1, 1, 4], &[2, 3, 1], &[1, 1, 1, 1, 2]] {
            let nu = fam(v);
            let want = cache.moment(&nu);
            for p in 0..nu.len() {
                assert_eq!(cache.moment_with_pivot(&nu, p), want, "nu={nu} pivot={p}");
            }
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("2,1,1".parse::<IndexFamily>().unwrap(), fam(&[2, 1, 1]));
        assert_eq!("( 3 , 3 )".parse::<IndexFamily>().unwrap(), fam(&[3, 3]));
        assert_eq!("()".parse::<IndexFamily>().unwrap(), IndexFamily::empty());
        assert!("2,0".parse::<IndexFamily>().is_err());
        assert!("2,,1".parse::<IndexFamily>().is_err());
        assert_eq!(fam(&[2, 1]).to_string(), "(2,1)");
    }

    #[test]
    fn sampler_contract() {
        let mut r = rng::stream(1, 0);
        assert_eq!(sample_gbe(0, 1.0, &mut r), Err(GbeError::EmptyEnsemble));
        assert!(matches!(sample_gbe(2, -0.5, &mut r), Err(GbeError::NegativeBeta(_))));
        for n in 1..6 {
            let s = sample_gbe(n, 2.0, &mut r).unwrap();
            assert_eq!(s.eigenvalues.len(), n);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn tridiagonal_eigen_matches_trace_identities() {
        let diag = [0.3, -1.2, 0.7, 2.0];
        let off = [0.5, 1.1, -0.4];
        let ev = tridiagonal_eigenvalues(&diag, &off);
        let tr: f64 = diag.iter().sum();
        let fro: f64 = diag.iter().map(|d| d * d).sum::<f64>() + 2.0 * off.iter().map(|o| o * o).sum::<f64>();
        assert!((ev.iter().sum::<f64>() - tr).abs() < 1e-12);
        assert!((power_sum(&ev, 2) - fro).abs() < 1e-12);
    }
}
