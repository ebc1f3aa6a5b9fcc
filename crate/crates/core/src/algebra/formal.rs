use super::coef::{fmt_coef_monomial, fmt_power, fmt_scaled};
use super::{pow_ring, AlgebraError, CoefPoly, Rational, Ring, Scalar};
use num_traits::{One, Signed};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// Formal variable.
///
/// * `Diag(k)` is `Y(k,k)`.
/// * `Check(k)` is the chain variable between positions `k-1` and `k`
///   (`k >= 2`), rendered `Yc(k-1,k)`.
/// * `Pair(k, l)` with `k < l` is the off-diagonal `Y(k,l)` used by the
///   two-particle closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    Diag(u32),
    Check(u32),
    Pair(u32, u32),
}

impl Var {
    /// Off-diagonal or diagonal `Y(k,l)` with the symmetric convention.
    pub fn y(k: u32, l: u32) -> Var {
        match k.cmp(&l) {
            Ordering::Equal => Var::Diag(k),
            Ordering::Less => Var::Pair(k, l),
            Ordering::Greater => Var::Pair(l, k),
        }
    }

    // Yc(k-1,k) sorts between Y(k-1,k-1) and Y(k,k); pairs follow their
    // first index.
    fn sort_key(&self) -> (u32, u8, u32) {
        match *self {
            Var::Check(k) => (k, 0, 0),
            Var::Diag(k) => (k, 1, 0),
            Var::Pair(k, l) => (k, 2, l),
        }
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Var::Diag(k) => write!(f, "Y({k},{k})"),
            Var::Check(k) => write!(f, "Yc({},{k})", k.saturating_sub(1)),
            Var::Pair(k, l) => write!(f, "Y({k},{l})"),
        }
    }
}

/// Product of variables with positive exponents, kept sorted by variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Self(Vec::new())
    }

    pub fn var(v: Var) -> Self {
        Self(vec![(v, 1)])
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, u32)>) -> Self {
        let mut map: BTreeMap<Var, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Self(map.into_iter().collect())
    }

    pub fn degree(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|(w, _)| *w == v)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn factors(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial::from_pairs(self.0.iter().chain(other.0.iter()).copied())
    }

    fn without(&self, v: Var) -> Monomial {
        Monomial(self.0.iter().filter(|(w, _)| *w != v).copied().collect())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(v, e)| fmt_power(&v.to_string(), *e))
            .collect();
        f.write_str(&parts.join("*"))
    }
}

/// Sparse polynomial in [`Var`]s with [`CoefPoly`] coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FormalPoly {
    terms: BTreeMap<Monomial, CoefPoly>,
}

impl FormalPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(CoefPoly::one())
    }

    pub fn constant(c: CoefPoly) -> Self {
        Self::term(c, Monomial::one())
    }

    pub fn rational(c: Rational) -> Self {
        Self::constant(CoefPoly::constant(c))
    }

    pub fn var(v: Var) -> Self {
        Self::term(CoefPoly::one(), Monomial::var(v))
    }

    pub fn term(c: CoefPoly, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &CoefPoly)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> CoefPoly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// The polynomial as a pure coefficient, if it has no variables.
    pub fn as_coef(&self) -> Option<CoefPoly> {
        match self.terms.len() {
            0 => Some(CoefPoly::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut vs: Vec<Var> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| *v))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Exact partial degree in `v` (`None` for the zero polynomial).
    pub fn degree_in(&self, v: Var) -> Option<u32> {
        self.terms.keys().map(|m| m.degree(v)).max()
    }

    pub fn scale(&self, c: &CoefPoly) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (m, k) in &self.terms {
            out.insert_add(m.clone(), k * c);
        }
        out
    }

    pub fn scale_rational(&self, c: &Rational) -> Self {
        self.scale(&CoefPoly::constant(c.clone()))
    }

    pub fn pow(&self, exp: u32) -> Self {
        pow_ring(self, exp)
    }

    pub fn map_coeffs(&self, f: impl Fn(&CoefPoly) -> CoefPoly) -> Self {
        let mut out = Self::zero();
        for (m, k) in &self.terms {
            out.insert_add(m.clone(), f(k));
        }
        out
    }

    /// Fixes `n`, leaving `beta` symbolic in the coefficients.
    pub fn eval_n(&self, n: &Rational) -> Self {
        self.map_coeffs(|k| k.eval_n(n))
    }

    /// Fixes both parameters; coefficients become constants.
    pub fn specialize(&self, beta: &Rational, n: &Rational) -> Self {
        self.map_coeffs(|k| CoefPoly::constant(k.eval_rational(beta, n)))
    }

    pub(crate) fn insert_add(&mut self, m: Monomial, c: CoefPoly) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get() + &c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// Homomorphic substitution. Unbound variables are kept.
    pub fn substitute(&self, bindings: &BTreeMap<Var, FormalPoly>) -> FormalPoly {
        let mut powers: BTreeMap<(Var, u32), FormalPoly> = BTreeMap::new();
        let mut out = FormalPoly::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut acc = FormalPoly::constant(c.clone());
            for &(v, e) in &m.0 {
                match bindings.get(&v) {
                    Some(p) => {
                        let pw = powers.entry((v, e)).or_insert_with(|| p.pow(e));
                        acc = &acc * &*pw;
                    }
                    None => kept.push((v, e)),
                }
            }
            let kept = FormalPoly::term(CoefPoly::one(), Monomial(kept));
            out = &out + &(&acc * &kept);
        }
        out
    }

    /// Substitutes rational values for every variable; fails naming the
    /// first variable without a binding.
    pub fn substitute_numeric(
        &self,
        bindings: &BTreeMap<Var, Rational>,
    ) -> Result<CoefPoly, AlgebraError> {
        let mut out = CoefPoly::zero();
        for (m, c) in &self.terms {
            let mut factor = Rational::one();
            for &(v, e) in &m.0 {
                let val = bindings.get(&v).ok_or(AlgebraError::UnboundVariable(v))?;
                factor *= pow_ring(val, e);
            }
            out = &out + &c.scale(&factor);
        }
        Ok(out)
    }

    /// Numeric evaluation at `(beta, n)` with variable values from `value`.
    pub fn eval<S: Scalar>(
        &self,
        beta: &S,
        n: &S,
        value: impl Fn(Var) -> Option<S>,
    ) -> Result<S, AlgebraError> {
        let mut cache: BTreeMap<Var, S> = BTreeMap::new();
        let mut acc = S::zero_value();
        for (m, c) in &self.terms {
            let mut t = c.eval(beta, n);
            for &(v, e) in &m.0 {
                let val = match cache.get(&v) {
                    Some(x) => x.clone(),
                    None => {
                        let x = value(v).ok_or(AlgebraError::UnboundVariable(v))?;
                        cache.insert(v, x.clone());
                        x
                    }
                };
                t = t.times(&pow_ring(&val, e));
            }
            acc = acc.plus(&t);
        }
        Ok(acc)
    }

    /// Term-wise antiderivative in `v` with zero constant of integration.
    pub fn antiderivative(&self, v: Var) -> FormalPoly {
        let mut out = FormalPoly::zero();
        for (m, c) in &self.terms {
            let e = m.degree(v);
            let mut pairs = m.without(v).0;
            pairs.push((v, e + 1));
            let c = c.scale(&super::rat(1, i64::from(e) + 1));
            out.insert_add(Monomial::from_pairs(pairs), c);
        }
        out
    }

    pub fn derivative(&self, v: Var) -> FormalPoly {
        let mut out = FormalPoly::zero();
        for (m, c) in &self.terms {
            let e = m.degree(v);
            if e == 0 {
                continue;
            }
            let mut pairs = m.without(v).0;
            pairs.push((v, e - 1));
            out.insert_add(Monomial::from_pairs(pairs), c.scale(&super::int(i64::from(e))));
        }
        out
    }

    /// The part of the polynomial free of `v`, i.e. `P(v = 0)`.
    pub fn set_zero(&self, v: Var) -> FormalPoly {
        FormalPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree(v) == 0)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Collapses positions beyond `k`: `Y(j,j) -> Y(k,k)` and
    /// `Yc(j-1,j) -> 1` for every `j > k`.
    pub fn k_project(&self, k: u32) -> FormalPoly {
        let mut out = FormalPoly::zero();
        for (m, c) in &self.terms {
            let pairs = m.0.iter().filter_map(|&(v, e)| match v {
                Var::Diag(j) if j > k => Some((Var::Diag(k), e)),
                Var::Check(j) if j > k => None,
                _ => Some((v, e)),
            });
            out.insert_add(Monomial::from_pairs(pairs), c.clone());
        }
        out
    }
}

impl Ring for FormalPoly {
    fn zero_value() -> Self {
        FormalPoly::zero()
    }
    fn one_value() -> Self {
        FormalPoly::one()
    }
    fn is_zero_value(&self) -> bool {
        FormalPoly::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl<'a> Add<&'a FormalPoly> for &'a FormalPoly {
    type Output = FormalPoly;
    fn add(self, rhs: &FormalPoly) -> FormalPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }
}

impl<'a> Sub<&'a FormalPoly> for &'a FormalPoly {
    type Output = FormalPoly;
    fn sub(self, rhs: &FormalPoly) -> FormalPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a FormalPoly> for &'a FormalPoly {
    type Output = FormalPoly;
    fn mul(self, rhs: &FormalPoly) -> FormalPoly {
        let mut out = FormalPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.insert_add(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &FormalPoly {
    type Output = FormalPoly;
    fn neg(self) -> FormalPoly {
        self.map_coeffs(|c| -c)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<FormalPoly> for FormalPoly {
            type Output = FormalPoly;
            fn $m(self, rhs: FormalPoly) -> FormalPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for FormalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mono = m.to_string();
            let (negative, body) = if c.len() == 1 {
                let ((db, dn), r) = c.terms().next().expect("one term");
                let cm = fmt_coef_monomial(db, dn);
                let full = match (cm.is_empty(), mono.is_empty()) {
                    (true, _) => mono.clone(),
                    (false, true) => cm,
                    (false, false) => format!("{cm}*{mono}"),
                };
                (r.is_negative(), fmt_scaled(r, &full))
            } else if mono.is_empty() {
                (false, format!("({c})"))
            } else {
                (false, format!("({c})*{mono}"))
            };
            match (i, negative) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for FormalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FormalPoly({self})")
    }
}

impl FromStr for FormalPoly {
    type Err = AlgebraError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        super::parse::parse_formal(s)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{int, rat};
    use super::*;

    fn y(k: u32) -> FormalPoly {
        FormalPoly::var(Var::Diag(k))
    }
    fn yc(k: u32) -> FormalPoly {
        FormalPoly::var(Var::Check(k))
    }

    #[test]
    fn substitution_of_p11() {
        // n * Y(1,1) * Yc(1,2) with Y(1,1) -> 2x, Yc(1,2) -> 1
        let p = (FormalPoly::constant(CoefPoly::n()) * y(1)) * yc(2);
        let x = FormalPoly::var(Var::Diag(9));
        let mut b = BTreeMap::new();
        b.insert(Var::Diag(1), x.scale_rational(&int(2)));
        b.insert(Var::Check(2), FormalPoly::one());
        let got = p.substitute(&b);
        let want = FormalPoly::constant(CoefPoly::n().scale(&int(2))) * x;
        assert_eq!(got, want);
    }

    #[test]
    fn identity_substitution_is_noop() {
        let p: FormalPoly = "3*n*Y(1,1)^2*Yc(1,2) - beta*Y(2,2)".parse().unwrap();
        let b: BTreeMap<Var, FormalPoly> = p
            .variables()
            .into_iter()
            .map(|v| (v, FormalPoly::var(v)))
            .collect();
        assert_eq!(p.substitute(&b), p);
    }

    #[test]
    fn numeric_substitution_reports_unbound() {
        let p = y(1) * yc(2);
        let mut b = BTreeMap::new();
        b.insert(Var::Diag(1), int(3));
        match p.substitute_numeric(&b) {
            Err(AlgebraError::UnboundVariable(v)) => assert_eq!(v, Var::Check(2)),
            other => panic!("unexpected {other:?}"),
        }
        b.insert(Var::Check(2), rat(1, 2));
        assert_eq!(p.substitute_numeric(&b).unwrap(), CoefPoly::constant(rat(3, 2)));
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p: FormalPoly = "Y(1,1)*Y(2,2)^2 + 5*n*Y(2,2) + beta".parse().unwrap();
        let a = p.antiderivative(Var::Diag(2));
        assert_eq!(a.derivative(Var::Diag(2)), p);
        assert!(a.set_zero(Var::Diag(2)).is_zero());
    }

    #[test]
    fn projection_collapses_tail() {
        let p: FormalPoly = "Y(1,1)*Yc(1,2)*Y(2,2)*Yc(2,3)*Y(3,3)".parse().unwrap();
        let want: FormalPoly = "Y(1,1)*Yc(1,2)*Y(2,2)^2".parse().unwrap();
        assert_eq!(p.k_project(2), want);
        assert_eq!(p.k_project(3), p);
        assert_eq!(p.k_project(1).to_string(), "Y(1,1)^3");
    }

    #[test]
    fn rendering_orders_variables_along_the_chain() {
        let p = &(&yc(3) * &y(2)) * &(&yc(2) * &y(1));
        assert_eq!(p.to_string(), "Y(1,1)*Yc(1,2)*Y(2,2)*Yc(2,3)");
        let q = FormalPoly::constant(CoefPoly::dimension()) * y(1);
        assert_eq!(q.to_string(), "(1/2*beta*n^2 - 1/2*beta*n + n)*Y(1,1)");
        assert_eq!(q.to_string().parse::<FormalPoly>().unwrap(), q);
    }
}
