//! One-dimensional analytic layer: Green functions on the half-line and
//! the line, and the solution `u` of `u''/2 = chi u` for piecewise-constant
//! `chi`, with its scale function `psi` and perturbed Green function.
//!
//! `u` is built backwards from the right end of the support, where it is
//! constant, and kept in log form so that long or strongly killing
//! intervals cannot overflow.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineError {
    #[error("invalid chi: {0}")]
    InvalidChi(String),
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),
}

pub fn green_halfline(x: f64, y: f64) -> f64 {
    2.0 * x.min(y)
}

pub fn green_massive(k: f64, x: f64, y: f64) -> f64 {
    let s = (2.0 * k).sqrt();
    (-s * (x - y).abs()).exp() / s
}

/// `chi = c_i` on `[t_{i-1}, t_i)` with `t_0 = 0`, zero beyond `t_r`.
/// Serialized as the list of pairs `[t_i, c_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct PiecewiseConstChi {
    ends: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseConstChi {
    pub fn new(pieces: Vec<(f64, f64)>) -> Result<Self, LineError> {
        let mut prev = 0.0;
        for &(t, c) in &pieces {
            if !t.is_finite() || t <= prev {
                return Err(LineError::InvalidChi(format!(
                    "breakpoints must be finite and increase from 0, got {t} after {prev}"
                )));
            }
            if !c.is_finite() || c < 0.0 {
                return Err(LineError::InvalidChi(format!("value {c} is not finite and >= 0")));
            }
            prev = t;
        }
        let (ends, values) = pieces.into_iter().unzip();
        Ok(Self { ends, values })
    }

    pub fn zero() -> Self {
        Self { ends: Vec::new(), values: Vec::new() }
    }

    /// `c` on `[a, b)`, zero elsewhere.
    pub fn indicator(c: f64, a: f64, b: f64) -> Result<Self, LineError> {
        if a <= 0.0 {
            Self::new(vec![(b, c)])
        } else {
            Self::new(vec![(a, 0.0), (b, c)])
        }
    }

    pub fn pieces(&self) -> Vec<(f64, f64)> {
        self.ends.iter().copied().zip(self.values.iter().copied()).collect()
    }

    /// Right end of the support (0 for `chi = 0`).
    pub fn support_end(&self) -> f64 {
        self.ends.last().copied().unwrap_or(0.0)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.ends
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self.ends.iter().position(|&t| x < t) {
            Some(i) => self.values[i],
            None => 0.0,
        }
    }

    /// `int_a^b chi`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut left = 0.0f64;
        let mut acc = 0.0;
        for (&t, &c) in self.ends.iter().zip(&self.values) {
            let lo = left.max(a);
            let hi = t.min(b);
            if hi > lo {
                acc += c * (hi - lo);
            }
            left = t;
        }
        acc
    }
}

impl TryFrom<Vec<(f64, f64)>> for PiecewiseConstChi {
    type Error = LineError;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self, LineError> {
        Self::new(v)
    }
}

impl From<PiecewiseConstChi> for Vec<(f64, f64)> {
    fn from(c: PiecewiseConstChi) -> Self {
        c.pieces()
    }
}

impl fmt::Display for PiecewiseConstChi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.pieces().iter().map(|(t, c)| format!("{t}:{c}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Command-line form `t1:c1,t2:c2,...`; the empty string is `chi = 0`.
impl FromStr for PiecewiseConstChi {
    type Err = LineError;
    fn from_str(s: &str) -> Result<Self, LineError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::zero());
        }
        let pieces = s
            .split(',')
            .map(|p| {
                let (t, c) = p
                    .split_once(':')
                    .ok_or_else(|| LineError::InvalidChi(format!("expected t:c, got {p:?}")))?;
                let parse = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| LineError::InvalidChi(format!("{x:?}: {e}")))
                };
                Ok((parse(t)?, parse(c)?))
            })
            .collect::<Result<Vec<_>, LineError>>()?;
        Self::new(pieces)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Interval {
    left: f64,
    right: f64,
    omega: f64,
    // log u and u'/u at the right end; log u at the left end; psi at the left end.
    log_u_right: f64,
    rho_right: f64,
    log_u_left: f64,
    psi_left: f64,
}

/// Solution of `u''/2 = chi u` on `[0, inf)`, positive, non-increasing,
/// constant beyond the support, normalized by `u(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSolution {
    chi: PiecewiseConstChi,
    intervals: Vec<Interval>,
    log_u_inf: f64,
    psi_end: f64,
}

/// `ln((1 + e^{-2z})/2 - rho (1 - e^{-2z})/(2 omega))` for `z = omega d`;
/// with the `z` term this is `ln(cosh z - rho sinh z / omega)`.
fn log_growth(omega: f64, d: f64, rho: f64) -> f64 {
    if omega == 0.0 {
        return (1.0 - rho * d).ln();
    }
    let z = omega * d;
    let e = (-2.0 * z).exp();
    z + (0.5 * (1.0 + e) - rho * 0.5 * (1.0 - e) / omega).ln()
}

/// `ln(sinh(z)/omega)` with the `omega -> 0` limit `ln d`.
fn log_sinh_over(omega: f64, d: f64) -> f64 {
    if omega == 0.0 || omega * d < 1e-8 {
        return d.ln();
    }
    let z = omega * d;
    z + (0.5 * (1.0 - (-2.0 * z).exp())).ln() - omega.ln()
}

pub fn solve_chi(chi: &PiecewiseConstChi) -> Result<ChiSolution, LineError> {
    let r = chi.values.len();
    let mut intervals = Vec::with_capacity(r);
    // Backward pass with the unnormalized convention u = 1 beyond the support.
    let mut log_u = 0.0;
    let mut rho = 0.0;
    for i in (0..r).rev() {
        let left = if i == 0 { 0.0 } else { chi.ends[i - 1] };
        let right = chi.ends[i];
        let h = right - left;
        let omega = (2.0 * chi.values[i]).sqrt();
        let log_u_left = log_u + log_growth(omega, h, rho);
        let rho_left = if omega == 0.0 {
            rho / (1.0 - rho * h)
        } else {
            let t = (omega * h).tanh();
            (rho - omega * t) / (1.0 - rho * t / omega)
        };
        if !log_u_left.is_finite() || !rho_left.is_finite() {
            return Err(LineError::Degenerate(format!("interval [{left}, {right}]")));
        }
        intervals.push(Interval {
            left,
            right,
            omega,
            log_u_right: log_u,
            rho_right: rho,
            log_u_left,
            psi_left: 0.0,
        });
        log_u = log_u_left;
        rho = rho_left;
    }
    intervals.reverse();
    let shift = log_u;
    for iv in &mut intervals {
        iv.log_u_right -= shift;
        iv.log_u_left -= shift;
    }
    // Forward pass for psi.
    let mut psi = 0.0;
    for iv in &mut intervals {
        iv.psi_left = psi;
        let h = iv.right - iv.left;
        psi += (log_sinh_over(iv.omega, h) - iv.log_u_left - iv.log_u_right).exp();
    }
    Ok(ChiSolution { chi: chi.clone(), intervals, log_u_inf: -shift, psi_end: psi })
}

impl ChiSolution {
    pub fn chi(&self) -> &PiecewiseConstChi {
        &self.chi
    }

    fn interval(&self, x: f64) -> Option<&Interval> {
        if x >= self.chi.support_end() {
            return None;
        }
        let i = self.intervals.partition_point(|iv| iv.right <= x);
        self.intervals.get(i)
    }

    pub fn log_u(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.interval(x) {
            None => self.log_u_inf,
            Some(iv) => iv.log_u_right + log_growth(iv.omega, iv.right - x, iv.rho_right),
        }
    }

    pub fn u(&self, x: f64) -> f64 {
        self.log_u(x).exp()
    }

    /// `u'(x)/u(x)`, the extra drift coefficient of the tilted dynamics.
    pub fn log_derivative(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self.interval(x) {
            None => 0.0,
            Some(iv) => {
                let d = iv.right - x;
                if iv.omega == 0.0 {
                    iv.rho_right / (1.0 - iv.rho_right * d)
                } else {
                    let t = (iv.omega * d).tanh();
                    (iv.rho_right - iv.omega * t) / (1.0 - iv.rho_right * t / iv.omega)
                }
            }
        }
    }

    pub fn du(&self, x: f64) -> f64 {
        self.u(x) * self.log_derivative(x)
    }

    pub fn u_inf(&self) -> f64 {
        self.log_u_inf.exp()
    }

    /// `psi(x) = int_0^x dy / u(y)^2`.
    pub fn psi(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self.interval(x) {
            None => {
                let end = self.chi.support_end();
                self.psi_end + (x - end) * (-2.0 * self.log_u_inf).exp()
            }
            Some(iv) => {
                let s = x - iv.left;
                if s <= 0.0 {
                    return iv.psi_left;
                }
                iv.psi_left + (log_sinh_over(iv.omega, s) - iv.log_u_left - self.log_u(x)).exp()
            }
        }
    }

    /// `G_chi(x, y) = 2 u(x) psi(x) u(y)` for `x <= y`, symmetrized.
    pub fn green(&self, x: f64, y: f64) -> f64 {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        2.0 * self.psi(a) * (self.log_u(a) + self.log_u(b)).exp()
    }
}

pub fn psi_chi(sol: &ChiSolution, x: f64) -> f64 {
    sol.psi(x)
}

pub fn green_chi(sol: &ChiSolution, x: f64, y: f64) -> f64 {
    sol.green(x, y)
}

/// `d(beta, n) = n + n(n-1) beta / 2` in floating point.
pub fn dimension_f64(beta: f64, n: f64) -> f64 {
    n + 0.5 * n * (n - 1.0) * beta
}

/// `<exp(-1/2 int p_2(lambda) chi)> = u(inf)^{d/2}`.
pub fn laplace_total(chi: &PiecewiseConstChi, beta: f64, n: f64) -> Result<f64, LineError> {
    let sol = solve_chi(chi)?;
    Ok((0.5 * dimension_f64(beta, n) * sol.log_u_inf).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_greens() {
        assert_eq!(green_halfline(1.0, 3.0), 2.0);
        assert!((green_massive(0.5, 0.7, 0.7) - 1.0).abs() < 1e-15);
        let k = 2.0f64;
        let s = (2.0 * k).sqrt();
        assert!((green_massive(k, 0.0, 1.5) - (-s * 1.5).exp() / s).abs() < 1e-15);
    }

    #[test]
    fn zero_chi_is_trivial() {
        let sol = solve_chi(&PiecewiseConstChi::zero()).unwrap();
        assert_eq!(sol.u(3.0), 1.0);
        assert_eq!(sol.u_inf(), 1.0);
        assert!((sol.psi(2.5) - 2.5).abs() < 1e-15);
        assert!((sol.green(1.0, 4.0) - 2.0).abs() < 1e-15);
        assert_eq!(laplace_total(&PiecewiseConstChi::zero(), 1.0, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn single_slab_matches_hand_solution() {
        // chi = c on [0, b): u = cosh(w(b-x)) / cosh(wb) there, 1/cosh(wb) beyond.
        let (c, b) = (0.8f64, 1.3f64);
        let w = (2.0 * c).sqrt();
        let sol = solve_chi(&PiecewiseConstChi::new(vec![(b, c)]).unwrap()).unwrap();
        for x in [0.0, 0.4, 1.0, 1.29] {
            let want = (w * (b - x)).cosh() / (w * b).cosh();
            assert!((sol.u(x) - want).abs() < 1e-13, "x={x}");
            let dwant = -w * (w * (b - x)).sinh() / (w * b).cosh();
            assert!((sol.du(x) - dwant).abs() < 1e-12);
        }
        assert!((sol.u_inf() - 1.0 / (w * b).cosh()).abs() < 1e-14);
        // psi = tanh-type closed form: int_0^x cosh(wb)^2/cosh(w(b-y))^2 dy
        let x = 0.9;
        let want = (w * b).cosh().powi(2) * ((w * b).tanh() - (w * (b - x)).tanh()) / w;
        assert!((sol.psi(x) - want).abs() < 1e-12);
    }

    #[test]
    fn huge_killing_does_not_overflow() {
        let sol = solve_chi(&PiecewiseConstChi::new(vec![(1.0, 0.0), (2.0, 5e5)]).unwrap()).unwrap();
        assert!(sol.log_u(5.0).is_finite());
        assert!(sol.u_inf() < 1e-100);
        // On the free interval u is affine with slope -w u(1) at 1.
        let w = 1000.0;
        assert!((sol.u(0.5) - (1.0 + 0.5 * w) / (1.0 + w)).abs() < 1e-12);
    }

    #[test]
    fn chi_text_and_json_round_trip() {
        let chi: PiecewiseConstChi = "0.5:0,1.5:2".parse().unwrap();
        assert_eq!(chi.value(0.2), 0.0);
        assert_eq!(chi.value(1.0), 2.0);
        assert_eq!(chi.value(2.0), 0.0);
        assert_eq!(chi.to_string().parse::<PiecewiseConstChi>().unwrap(), chi);
        let json = serde_json::to_string(&chi).unwrap();
        assert_eq!(json, "[[0.5,0.0],[1.5,2.0]]");
        assert_eq!(serde_json::from_str::<PiecewiseConstChi>(&json).unwrap(), chi);
        assert!(serde_json::from_str::<PiecewiseConstChi>("[[1.0,-1.0]]").is_err());
        assert!(serde_json::from_str::<PiecewiseConstChi>("[[1.0,1.0],[0.5,1.0]]").is_err());
        assert!((chi.integral(0.0, 10.0) - 2.0).abs() < 1e-15);
    }
}
