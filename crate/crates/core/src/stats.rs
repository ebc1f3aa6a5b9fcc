//! Estimators used by the Monte Carlo checks: compensated means,
//! jackknife standard errors, z-scores and one-sample KS statistics.

use serde::{Deserialize, Serialize};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: &[f64]) -> f64 {
    let mut s = NeumaierSum::default();
    xs.iter().for_each(|&x| s.add(x));
    s.value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs) / xs.len() as f64
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn z_score(&self, exact: f64) -> f64 {
        z_score(self.value, exact, self.stderr)
    }
}

/// Sample mean with jackknife standard error. For a plain mean the
/// jackknife reduces to `s / sqrt(N)`.
pub fn mean_estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    let m = mean(xs);
    let stderr = if n < 2 {
        f64::NAN
    } else {
        let mut ss = NeumaierSum::default();
        xs.iter().for_each(|&x| ss.add((x - m) * (x - m)));
        (ss.value() / ((n - 1) * n) as f64).sqrt()
    };
    Estimate { value: m, stderr, samples: n }
}

/// Delete-one jackknife for a smooth function of several sample means.
/// `columns[j][i]` is observable `j` on replica `i`.
pub fn jackknife(columns: &[Vec<f64>], f: impl Fn(&[f64]) -> f64) -> Estimate {
    let k = columns.len();
    let n = columns.first().map_or(0, Vec::len);
    assert!(columns.iter().all(|c| c.len() == n), "ragged columns");
    let sums: Vec<f64> = columns.iter().map(|c| sum(c)).collect();
    let means: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let value = f(&means);
    if n < 2 {
        return Estimate { value, stderr: f64::NAN, samples: n };
    }
    let mut loo = vec![0.0; k];
    let mut leave_out = Vec::with_capacity(n);
    for i in 0..n {
        for ((l, s), col) in loo.iter_mut().zip(&sums).zip(columns) {
            *l = (s - col[i]) / (n - 1) as f64;
        }
        leave_out.push(f(&loo));
    }
    let bar = mean(&leave_out);
    let mut ss = NeumaierSum::default();
    leave_out.iter().for_each(|&t| ss.add((t - bar) * (t - bar)));
    let stderr = (ss.value() * (n - 1) as f64 / n as f64).sqrt();
    Estimate { value, stderr, samples: n }
}

/// `(estimate - exact) / stderr`; zero error bars give 0 on exact
/// agreement and infinity otherwise.
pub fn z_score(estimate: f64, exact: f64, stderr: f64) -> f64 {
    let d = estimate - exact;
    if stderr > 0.0 {
        d / stderr
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// One-sample Kolmogorov–Smirnov statistic `sup |F_N - F|`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(sum(&[1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn jackknife_of_mean_matches_closed_form() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let a = mean_estimate(&xs);
        let b = jackknife(std::slice::from_ref(&xs), |m| m[0]);
        assert!((a.value - b.value).abs() < 1e-12);
        assert!((a.stderr - b.stderr).abs() < 1e-12);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(1.0, 1.0, 0.0), 0.0);
        assert!(z_score(1.0, 2.0, 0.0).is_infinite());
        assert_eq!(z_score(3.0, 1.0, 0.5), 4.0);
    }

    #[test]
    fn ks_of_uniform_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.0005 + 1e-12);
    }
}
