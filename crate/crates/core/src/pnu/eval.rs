//! Numeric substitutions of `P_nu`: half-line, stationary and
//! `chi`-perturbed Green functions.

use super::{build_pnu, PnuError, PnuPolynomial};
use crate::algebra::{Rational, Var};
use crate::gbe::IndexFamily;
use crate::line::{green_halfline, green_massive, ChiSolution};

/// Which Green function feeds the variables.
#[derive(Debug, Clone, Copy)]
pub enum Substitution<'a> {
    /// `Y(k,k) = 2 x_k`, `Yc = 1`.
    Halfline,
    /// `Y(k,k) = 1/sqrt(2K)`, `Yc(k-1,k) = exp(-sqrt(2K)(x_k - x_{k-1}))`.
    Stationary { k: f64 },
    /// `Y(k,k) = G_chi(x_k, x_k)`, `Yc(k-1,k) = u(x_k)/u(x_{k-1})`.
    Chi(&'a ChiSolution),
}

impl Substitution<'_> {
    /// Covariance of the Gaussian field this substitution describes.
    pub fn covariance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Substitution::Halfline => green_halfline(x, y),
            Substitution::Stationary { k } => green_massive(k, x, y),
            Substitution::Chi(sol) => sol.green(x, y),
        }
    }

    fn diag(&self, x: f64) -> f64 {
        match *self {
            Substitution::Halfline => 2.0 * x,
            Substitution::Stationary { k } => 1.0 / (2.0 * k).sqrt(),
            Substitution::Chi(sol) => sol.green(x, x),
        }
    }

    fn check(&self, prev: f64, x: f64) -> f64 {
        match *self {
            Substitution::Halfline => 1.0,
            Substitution::Stationary { k } => (-(2.0 * k).sqrt() * (x - prev)).exp(),
            Substitution::Chi(sol) => (sol.log_u(x) - sol.log_u(prev)).exp(),
        }
    }

    fn validate(&self, points: &[f64]) -> Result<(), PnuError> {
        if points.iter().any(|x| !x.is_finite()) {
            return Err(PnuError::InvalidParameter("points must be finite".into()));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(PnuError::Unordered(format!(": {points:?}")));
        }
        match *self {
            Substitution::Stationary { k } if !(k > 0.0 && k.is_finite()) => {
                Err(PnuError::InvalidParameter(format!("K must be positive, got {k}")))
            }
            Substitution::Halfline | Substitution::Chi(_) if points.iter().any(|&x| x < 0.0) => {
                Err(PnuError::InvalidParameter("points must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Evaluates a built `P_nu` at `(beta, n)` and ascending `points`.
pub fn eval_points(
    p: &PnuPolynomial,
    beta: f64,
    n: f64,
    points: &[f64],
    substitution: Substitution<'_>,
) -> Result<f64, PnuError> {
    let m = p.nu.len();
    if points.len() != m {
        return Err(PnuError::PointCount { expected: m, got: points.len() });
    }
    substitution.validate(points)?;
    let value = p.poly.eval(&beta, &n, |v| match v {
        Var::Diag(k) => points.get(k as usize - 1).map(|&x| substitution.diag(x)),
        Var::Check(k) if k >= 2 => {
            let i = k as usize - 1;
            points.get(i).map(|&x| substitution.check(points[i - 1], x))
        }
        _ => None,
    })?;
    Ok(value)
}

pub fn eval_halfline(nu: &IndexFamily, beta: f64, n: f64, points: &[f64]) -> Result<f64, PnuError> {
    eval_points(&build_pnu(nu)?, beta, n, points, Substitution::Halfline)
}

pub fn eval_stationary(
    nu: &IndexFamily,
    beta: f64,
    n: f64,
    k: f64,
    points: &[f64],
) -> Result<f64, PnuError> {
    eval_points(&build_pnu(nu)?, beta, n, points, Substitution::Stationary { k })
}

pub fn eval_chi(
    nu: &IndexFamily,
    beta: f64,
    n: f64,
    sol: &ChiSolution,
    points: &[f64],
) -> Result<f64, PnuError> {
    eval_points(&build_pnu(nu)?, beta, n, points, Substitution::Chi(sol))
}

/// Exact half-line value at rational parameters and points.
pub fn eval_halfline_exact(
    nu: &IndexFamily,
    beta: &Rational,
    n: &Rational,
    points: &[Rational],
) -> Result<Rational, PnuError> {
    let p = build_pnu(nu)?;
    if points.len() != nu.len() {
        return Err(PnuError::PointCount { expected: nu.len(), got: points.len() });
    }
    if points.windows(2).any(|w| w[1] < w[0]) {
        return Err(PnuError::Unordered(String::new()));
    }
    let two = crate::algebra::int(2);
    let one = crate::algebra::int(1);
    Ok(p.poly.eval(beta, n, |v| match v {
        Var::Diag(k) => points.get(k as usize - 1).map(|x| &two * x),
        Var::Check(_) => Some(one.clone()),
        Var::Pair(..) => None,
    })?)
}
