use super::{pow_ring, AlgebraError, Rational, Ring, Scalar};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

/// Polynomial in the formal parameters `beta` and `n` with rational
/// coefficients. Keys are `(deg_beta, deg_n)`; zero coefficients are never
/// stored, so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CoefPoly {
    terms: BTreeMap<(u32, u32), Rational>,
}

impl CoefPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn monomial(c: Rational, deg_beta: u32, deg_n: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((deg_beta, deg_n), c);
        }
        Self { terms }
    }

    pub fn beta() -> Self {
        Self::monomial(Rational::one(), 1, 0)
    }

    pub fn n() -> Self {
        Self::monomial(Rational::one(), 0, 1)
    }

    /// `d(beta, n) = n + n(n-1) beta / 2`.
    pub fn dimension() -> Self {
        let n = Self::n();
        let half_beta = Self::beta().scale(&super::rat(1, 2));
        &n + &(&(&n * &(&n - &Self::one())) * &half_beta)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &Rational)> {
        self.terms.iter().map(|(k, v)| (*k, v))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, deg_beta: u32, deg_n: u32) -> Rational {
        self.terms
            .get(&(deg_beta, deg_n))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Returns the constant value when the polynomial has no `beta`/`n`.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    pub fn degree_n(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.1).max()
    }

    pub fn degree_beta(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        pow_ring(self, exp)
    }

    fn insert_add(&mut self, key: (u32, u32), c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                let s = e.get() + c;
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
        }
    }

    /// Exact evaluation at a numeric point.
    pub fn eval<S: Scalar>(&self, beta: &S, n: &S) -> S {
        let mut acc = S::zero_value();
        for (&(db, dn), c) in &self.terms {
            let t = S::from_rational(c)
                .times(&pow_ring(beta, db))
                .times(&pow_ring(n, dn));
            acc = acc.plus(&t);
        }
        acc
    }

    pub fn eval_rational(&self, beta: &Rational, n: &Rational) -> Rational {
        self.eval(beta, n)
    }

    /// Substitutes a value for `n`, keeping `beta` symbolic.
    pub fn eval_n(&self, n: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(db, dn), c) in &self.terms {
            out.insert_add((db, 0), c * pow_ring(n, dn));
        }
        out
    }

    /// Substitutes a value for `beta`, keeping `n` symbolic.
    pub fn eval_beta(&self, beta: &Rational) -> Self {
        let mut out = Self::zero();
        for (&(db, dn), c) in &self.terms {
            out.insert_add((0, dn), c * pow_ring(beta, db));
        }
        out
    }
}

impl Ring for CoefPoly {
    fn zero_value() -> Self {
        CoefPoly::zero()
    }
    fn one_value() -> Self {
        CoefPoly::one()
    }
    fn is_zero_value(&self) -> bool {
        CoefPoly::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl<'a> Add<&'a CoefPoly> for &'a CoefPoly {
    type Output = CoefPoly;
    fn add(self, rhs: &CoefPoly) -> CoefPoly {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.insert_add(*k, v.clone());
        }
        out
    }
}

impl<'a> Sub<&'a CoefPoly> for &'a CoefPoly {
    type Output = CoefPoly;
    fn sub(self, rhs: &CoefPoly) -> CoefPoly {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.insert_add(*k, -v.clone());
        }
        out
    }
}

impl<'a> Mul<&'a CoefPoly> for &'a CoefPoly {
    type Output = CoefPoly;
    fn mul(self, rhs: &CoefPoly) -> CoefPoly {
        let mut out = CoefPoly::zero();
        for (&(b1, n1), c1) in &self.terms {
            for (&(b2, n2), c2) in &rhs.terms {
                out.insert_add((b1 + b2, n1 + n2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &CoefPoly {
    type Output = CoefPoly;
    fn neg(self) -> CoefPoly {
        CoefPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, -v.clone())).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<CoefPoly> for CoefPoly {
            type Output = CoefPoly;
            fn $m(self, rhs: CoefPoly) -> CoefPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

pub(crate) fn fmt_rational_abs(r: &Rational) -> String {
    let a = r.abs();
    if a.denom().is_one() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

pub(crate) fn fmt_power(name: &str, exp: u32) -> String {
    if exp == 1 {
        name.to_string()
    } else {
        format!("{name}^{exp}")
    }
}

/// Factor list for a `(deg_beta, deg_n)` key, e.g. `beta^2*n`.
pub(crate) fn fmt_coef_monomial(db: u32, dn: u32) -> String {
    let mut parts = Vec::new();
    if db > 0 {
        parts.push(fmt_power("beta", db));
    }
    if dn > 0 {
        parts.push(fmt_power("n", dn));
    }
    parts.join("*")
}

/// Writes `|c| * mono` (without sign), omitting a unit coefficient.
pub(crate) fn fmt_scaled(c: &Rational, mono: &str) -> String {
    let abs = fmt_rational_abs(c);
    if mono.is_empty() {
        abs
    } else if c.abs().is_one() {
        mono.to_string()
    } else {
        format!("{abs}*{mono}")
    }
}

impl CoefPoly {
    /// Canonical ordering: descending in `beta` degree, then in `n` degree.
    fn ordered_terms(&self) -> impl Iterator<Item = (&(u32, u32), &Rational)> {
        self.terms.iter().rev()
    }
}

impl fmt::Display for CoefPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (&(db, dn), c)) in self.ordered_terms().enumerate() {
            let body = fmt_scaled(c, &fmt_coef_monomial(db, dn));
            match (i, c.is_negative()) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CoefPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefPoly({self})")
    }
}

impl FromStr for CoefPoly {
    type Err = AlgebraError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let p = super::parse::parse_formal(s)?;
        p.as_coef().ok_or_else(|| AlgebraError::Parse {
            pos: 0,
            msg: "expected an expression in beta and n only".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{int, rat};
    use super::*;

    #[test]
    fn dimension_at_sample_points() {
        let d = CoefPoly::dimension();
        assert_eq!(d.eval_rational(&int(1), &int(2)), int(3));
        assert_eq!(d.eval_rational(&rat(-2, 3), &int(3)), int(1));
        assert_eq!(CoefPoly::zero().eval_rational(&rat(7, 5), &int(-4)), int(0));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let p = &CoefPoly::beta() - &CoefPoly::beta();
        assert!(p.is_zero());
        assert_eq!(p, CoefPoly::zero());
        assert_eq!(p.to_string(), "0");
    }

    #[test]
    fn rendering_is_canonical() {
        let d = CoefPoly::dimension();
        assert_eq!(d.to_string(), "1/2*beta*n^2 - 1/2*beta*n + n");
        let q = &CoefPoly::from_int(-3) + &CoefPoly::beta().pow(2);
        assert_eq!(q.to_string(), "beta^2 - 3");
        assert_eq!(q.to_string().parse::<CoefPoly>().unwrap(), q);
    }

    #[test]
    fn partial_evaluation_commutes() {
        let d = CoefPoly::dimension().pow(2);
        let full = d.eval_rational(&rat(5, 2), &int(3));
        assert_eq!(d.eval_n(&int(3)).eval_rational(&rat(5, 2), &int(0)), full);
        assert_eq!(d.eval_beta(&rat(5, 2)).eval_rational(&int(0), &int(3)), full);
    }
}
