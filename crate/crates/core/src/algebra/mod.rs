//! Exact arithmetic: rationals, polynomials in the formal parameters `beta`
//! and `n`, sparse formal polynomials in the `Y` variables, and
//! alpha-permanents over any of these rings.

mod coef;
mod formal;
mod parse;
mod perm;

pub use coef::CoefPoly;
pub use formal::{FormalPoly, Monomial, Var};
pub use perm::{
    for_each_pair_partition, pair_partition_count, perm_alpha, perm_alpha_with_limit,
    SquareMatrix, DEFAULT_PERM_LIMIT,
};

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt::Debug;
use thiserror::Error;

/// Arbitrary-precision rational. Always normalised: positive denominator,
/// reduced, zero stored as `0/1`.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("matrix dimension {dim} exceeds the permanent size limit {limit}")]
    SizeLimit { dim: usize, limit: usize },
    #[error("matrix must be square: {len} entries for dimension {dim}")]
    NotSquare { dim: usize, len: usize },
    #[error("permanental kernel must be symmetric")]
    NotSymmetric,
    #[error("variable {0} has no binding")]
    UnboundVariable(Var),
    #[error("expression too large: {0}")]
    TooLarge(String),
}

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `a`, `a/b` or a decimal such as `-2.5` exactly.
pub fn parse_rational(s: &str) -> Result<Rational, AlgebraError> {
    let t = s.trim();
    let err = |msg: &str| AlgebraError::Parse { pos: 0, msg: format!("{msg}: {t:?}") };
    if let Some((num, den)) = t.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if (whole.is_empty() && frac.is_empty()) || !(whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return Err(err("not a number"));
    }
    if frac.len() > 64 {
        return Err(err("too many decimals"));
    }
    let digits: BigInt = format!("0{whole}{frac}").parse().map_err(|_| err("not a number"))?;
    let value = Rational::new(digits, BigInt::from(10u32).pow(frac.len() as u32));
    Ok(if neg { -value } else { value })
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    // Ratio::to_f64 handles huge numerators/denominators without overflow.
    r.to_f64().unwrap_or(f64::NAN)
}

/// Commutative ring with unit, as needed by `perm_alpha` and the formal
/// polynomial machinery.
///
/// Method names avoid `zero`/`one`/`add`/`mul` so they never shadow the
/// inherent and `num_traits` methods of the implementing types.
pub trait Ring: Clone + Debug {
    fn zero_value() -> Self;
    fn one_value() -> Self;
    fn is_zero_value(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
}

/// Numeric targets for evaluating symbolic expressions.
pub trait Scalar: Ring {
    fn from_rational(r: &Rational) -> Self;
}

impl Ring for f64 {
    fn zero_value() -> Self {
        0.0
    }
    fn one_value() -> Self {
        1.0
    }
    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational_to_f64(r)
    }
}

impl Ring for Rational {
    fn zero_value() -> Self {
        Zero::zero()
    }
    fn one_value() -> Self {
        One::one()
    }
    fn is_zero_value(&self) -> bool {
        Zero::is_zero(self)
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
}

pub(crate) fn pow_ring<T: Ring>(base: &T, exp: u32) -> T {
    let mut acc = T::one_value();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.times(&b);
        }
        e >>= 1;
        if e > 0 {
            b = b.times(&b);
        }
    }
    acc
}
