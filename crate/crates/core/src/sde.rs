//! Monte Carlo engines for beta-Dyson Brownian motion and squared Bessel
//! (CIR) occupation processes.
//!
//! Paths are recorded only at requested points. The particle grid is
//! uniform between consecutive "must-hit" points (record points, breakpoints
//! of `chi`) so those are reached exactly, and graded near the origin for
//! paths started there.

use crate::gbe::{sample_gbe, GbeError};
use crate::line::{dimension_f64, solve_chi, ChiSolution, LineError, PiecewiseConstChi};
use crate::rng::{self, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite state at x = {0}")]
    NonFinite(f64),
    #[error(transparent)]
    Gbe(#[from] GbeError),
    #[error(transparent)]
    Line(#[from] LineError),
}

/// Drift increments are clamped to this many multiples of `sqrt(2 dt)`.
pub const CLAMP_FACTOR: f64 = 10.0;
/// Default step as a fraction of the horizon.
pub const DEFAULT_DT_FRACTION: f64 = 1e-4;
/// Clamp frequency above which a path is flagged.
pub const CLAMP_WARN_RATE: f64 = 1e-3;
/// Paths started at the origin take steps of at most this fraction of the
/// elapsed time. A step comparable to `x` is comparable to the squared gaps
/// there, and the bias it leaves in `p_2` is never forgotten.
pub const GRADE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Halfline,
    Stationary,
    Tilted,
    N2,
}

/// Treatment of the drift in the interacting-particle loop.
///
/// Plain Euler carries a weak error `h^2 |D|^2` per step in `p_2`; at
/// `beta = 1` the mean of `|D|^2` has a log-divergent gap integral, so the
/// bias in `<p_2>` is of order `h log(1/h)` and visible at 10^5 paths.
/// Heun averages the drift at both ends of the step and leaves an error
/// `h^2 |D(y*) - D(lambda)|^2 / 4`, which is `O(h)` overall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftScheme {
    Euler,
    #[default]
    Heun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub n: usize,
    pub beta: f64,
    /// Time step; `None` means `DEFAULT_DT_FRACTION * horizon`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Ascending points where the state is recorded.
    pub record: Vec<f64>,
    /// Killing rate of the stationary dynamics.
    #[serde(default)]
    pub k: Option<f64>,
    /// Tilt of the `Tilted` variant.
    #[serde(default)]
    pub chi: Option<PiecewiseConstChi>,
    /// When set, each path also reports `int p_2(lambda(x)) chi(x) dx`.
    #[serde(default)]
    pub observe: Option<PiecewiseConstChi>,
    #[serde(default)]
    pub scheme: DriftScheme,
}

impl SdeConfig {
    pub fn new(n: usize, beta: f64, record: Vec<f64>) -> Self {
        Self { n, beta, dt: None, record, k: None, chi: None, observe: None, scheme: DriftScheme::default() }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_chi(mut self, chi: PiecewiseConstChi) -> Self {
        self.chi = Some(chi);
        self
    }

    pub fn with_observe(mut self, chi: PiecewiseConstChi) -> Self {
        self.observe = Some(chi);
        self
    }

    pub fn with_scheme(mut self, scheme: DriftScheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Right end of the simulated interval.
    pub fn horizon(&self) -> f64 {
        let mut h = self.record.last().copied().unwrap_or(0.0);
        if let Some(c) = &self.observe {
            h = h.max(c.support_end());
        }
        h
    }

    pub fn step(&self) -> f64 {
        self.dt.unwrap_or(DEFAULT_DT_FRACTION * self.horizon())
    }

    fn validate(&self, variant: Variant) -> Result<(), SdeError> {
        let bad = |m: String| Err(SdeError::Config(m));
        if self.n < 2 && variant != Variant::N2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.record.is_empty() {
            return bad("no record points".into());
        }
        if self.record.iter().any(|x| !x.is_finite())
            || self.record.windows(2).any(|w| w[1] < w[0])
        {
            return bad(format!("record points must be finite and ascending: {:?}", self.record));
        }
        if variant != Variant::Stationary && self.record[0] < 0.0 {
            return bad("record points must be nonnegative".into());
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite".into());
        }
        match variant {
            Variant::N2 => {
                if self.n != 2 {
                    return bad("the Bessel construction needs n = 2".into());
                }
                if self.beta <= -1.0 {
                    return bad(format!("the Bessel construction needs beta > -1, got {}", self.beta));
                }
            }
            _ if self.beta < 0.0 => {
                return bad(format!("beta < 0 is only available for n = 2, got {}", self.beta));
            }
            _ => {}
        }
        if variant == Variant::Stationary || (variant == Variant::N2 && self.k.is_some()) {
            match self.k {
                Some(k) if k > 0.0 && k.is_finite() => {}
                _ => return bad("stationary dynamics need K > 0".into()),
            }
        }
        if variant == Variant::Tilted && self.chi.is_none() {
            return bad("tilted dynamics need chi".into());
        }
        Ok(())
    }
}

/// State at the record points, each column sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
    pub stream: u64,
    pub steps: u64,
    pub clamp_events: u64,
    /// `int p_2(lambda) chi` for the observed `chi`, if requested.
    pub observed: Option<f64>,
    /// Set when `0 <= beta < 1` with `n >= 3` (collisions possible) or the
    /// clamp rate exceeds `CLAMP_WARN_RATE`.
    pub warning: bool,
}

impl SamplePath {
    pub fn power_sum(&self, point: usize, q: u32) -> f64 {
        crate::gbe::power_sum(&self.values[point], q)
    }

    pub fn clamp_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.clamp_events as f64 / self.steps as f64
        }
    }
}

/// Integration nodes from `start`: uniform steps of at most `dt` between
/// consecutive must-hit points.
fn build_grid(start: f64, must_hit: &[f64], dt: f64) -> Vec<f64> {
    let mut marks: Vec<f64> = must_hit.iter().copied().filter(|&x| x > start).collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let mut grid = vec![start];
    let mut a = start;
    for b in marks {
        let steps = ((b - a) / dt).ceil().max(1.0) as usize;
        let h = (b - a) / steps as f64;
        for i in 1..steps {
            grid.push(a + h * i as f64);
        }
        grid.push(b);
        a = b;
    }
    grid
}

/// Grid from the origin whose steps are `min(dt, GRADE x)`. The first node
/// sits at `GRADE dt`, where the exact marginal is drawn.
fn graded_grid(must_hit: &[f64], dt: f64) -> Vec<f64> {
    let mut marks: Vec<f64> = must_hit.iter().copied().filter(|&x| x > 0.0).collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup();
    let Some(&first) = marks.first() else { return vec![0.0] };
    let mut a = (GRADE * dt).min(first);
    let mut grid = vec![0.0, a];
    let mut rest = Vec::new();
    for &b in &marks {
        while a < b && GRADE * a < dt {
            let h = GRADE * a;
            a = if a + 1.5 * h >= b { b } else { a + h };
            grid.push(a);
        }
        if a < b {
            rest.push(b);
        }
    }
    grid.extend(build_grid(a, &rest, dt).into_iter().skip(1));
    grid
}

struct Recorder<'a> {
    record: &'a [f64],
    next: usize,
    values: Vec<Vec<f64>>,
}

impl<'a> Recorder<'a> {
    fn new(record: &'a [f64]) -> Self {
        Self { record, next: 0, values: Vec::with_capacity(record.len()) }
    }

    #[inline]
    fn offer(&mut self, x: f64, state: &[f64]) {
        while self.next < self.record.len() && self.record[self.next] <= x {
            self.values.push(state.to_vec());
            self.next += 1;
        }
    }
}

/// Insertion sort; states are short and nearly sorted after every step.
#[inline]
fn sort_desc(v: &mut [f64]) {
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] < v[j] {
            v.swap(j - 1, j);
            j -= 1;
        }
    }
}

/// `beta sum_k 1/(v_j - v_k) + linear v_j` for every `j`.
#[inline]
fn drift_into(v: &[f64], beta: f64, linear: f64, out: &mut [f64]) {
    let n = v.len();
    for (d, &x) in out[..n].iter_mut().zip(v) {
        *d = linear * x;
    }
    if beta != 0.0 {
        for j in 0..n {
            for k in j + 1..n {
                let r = beta / (v[j] - v[k]);
                out[j] += r;
                out[k] -= r;
            }
        }
    }
}

#[inline]
fn p2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn gbe_scaled(n: usize, beta: f64, scale: f64, rng: &mut StreamRng) -> Result<Vec<f64>, SdeError> {
    let mut v = sample_gbe(n, beta, rng)?.eigenvalues;
    v.iter_mut().for_each(|x| *x *= scale);
    Ok(v)
}

/// Path-independent data of the particle loop: the grid, the linear drift
/// coefficient at every node and the observation weight of every cell.
struct Plan {
    grid: Vec<f64>,
    linear: Vec<f64>,
    weight: Option<Vec<f64>>,
    /// Scale of the GbE sample at the first simulated node.
    start_scale: f64,
}

impl Plan {
    fn new(cfg: &SdeConfig, variant: Variant, tilt: Option<&ChiSolution>) -> Self {
        let stationary = variant == Variant::Stationary;
        let mut must_hit = cfg.record.clone();
        must_hit.push(cfg.horizon());
        if let Some(c) = &cfg.chi {
            must_hit.extend_from_slice(c.breakpoints());
        }
        if let Some(c) = &cfg.observe {
            must_hit.extend_from_slice(c.breakpoints());
        }
        let grid = if stationary {
            build_grid(cfg.record[0], &must_hit, cfg.step())
        } else {
            graded_grid(&must_hit, cfg.step())
        };
        let kappa = cfg.k.map(|k| (2.0 * k).sqrt()).unwrap_or(0.0);
        let linear = grid
            .iter()
            .map(|&x| match (variant, tilt) {
                (Variant::Stationary, _) => -kappa,
                (Variant::Tilted, Some(sol)) => sol.log_derivative(x),
                _ => 0.0,
            })
            .collect();
        let weight = cfg.observe.as_ref().map(|c| grid.windows(2).map(|w| c.value(0.5 * (w[0] + w[1]))).collect());
        // Exact marginal at the first node: sqrt(2x) GbE, or through the
        // scale map u(x) sqrt(2 psi(x)) GbE when tilted.
        let start_scale = match (stationary, tilt, grid.get(1)) {
            (true, _, _) => (2.0 * cfg.k.unwrap_or(1.0)).powf(-0.25),
            (false, Some(sol), Some(&x1)) => sol.u(x1) * (2.0 * sol.psi(x1)).sqrt(),
            (false, None, Some(&x1)) => (2.0 * x1).sqrt(),
            (false, _, None) => 0.0,
        };
        Self { grid, linear, weight, start_scale }
    }
}

/// Particle positions; fixed-size arrays let small systems unroll.
trait Particles: AsRef<[f64]> + AsMut<[f64]> {
    fn zeros(n: usize) -> Self;
}

impl<const N: usize> Particles for [f64; N] {
    fn zeros(_: usize) -> Self {
        [0.0; N]
    }
}

impl Particles for Vec<f64> {
    fn zeros(n: usize) -> Self {
        vec![0.0; n]
    }
}

/// Shared predictor-corrector loop for the interacting-particle variants.
fn particle_path(cfg: &SdeConfig, variant: Variant, plan: &Plan, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    match cfg.n {
        1 => particle_loop::<[f64; 1]>(cfg, variant, plan, seed, stream),
        2 => particle_loop::<[f64; 2]>(cfg, variant, plan, seed, stream),
        3 => particle_loop::<[f64; 3]>(cfg, variant, plan, seed, stream),
        4 => particle_loop::<[f64; 4]>(cfg, variant, plan, seed, stream),
        _ => particle_loop::<Vec<f64>>(cfg, variant, plan, seed, stream),
    }
}

fn particle_loop<S: Particles>(
    cfg: &SdeConfig,
    variant: Variant,
    plan: &Plan,
    seed: u64,
    stream: u64,
) -> Result<SamplePath, SdeError> {
    let n = cfg.n;
    let beta = cfg.beta;
    let grid = &plan.grid;
    let mut rng = rng::stream(seed, stream);
    let stationary = variant == Variant::Stationary;

    let mut rec = Recorder::new(&cfg.record);
    let mut state_buf = S::zeros(n);
    let state = state_buf.as_mut();
    let mut first = 1;
    if stationary {
        state.copy_from_slice(&gbe_scaled(n, beta, plan.start_scale, &mut rng)?);
        rec.offer(grid[0], state);
    } else {
        rec.offer(0.0, state);
        if grid.len() > 1 {
            state.copy_from_slice(&gbe_scaled(n, beta, plan.start_scale, &mut rng)?);
            first = 2;
        }
    }

    let mut observed = plan.weight.as_ref().map(|_| 0.0);
    if let (Some(acc), Some(w)) = (observed.as_mut(), &plan.weight) {
        if !stationary && grid.len() > 1 {
            // p_2 grows linearly from 0 on the first cell.
            *acc += w[0] * 0.5 * p2(state) * grid[1];
        }
    }
    if first == 2 {
        rec.offer(grid[1], state);
    }

    let heun_scheme = cfg.scheme == DriftScheme::Heun;
    let (mut drift, mut drift_end, mut noise, mut predicted) = (S::zeros(n), S::zeros(n), S::zeros(n), S::zeros(n));
    let (drift, drift_end, noise, predicted) = (drift.as_mut(), drift_end.as_mut(), noise.as_mut(), predicted.as_mut());
    let mut clamp_events = 0u64;
    let mut steps = 0u64;
    let mut p2_before = p2(state);
    for i in first - 1..grid.len().saturating_sub(1) {
        let (x, x_next) = (grid[i], grid[i + 1]);
        let h = x_next - x;
        let sq = (2.0 * h).sqrt();
        let cap = CLAMP_FACTOR * sq;
        drift_into(state, beta, plan.linear[i], drift);
        for z in noise.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for j in 0..n {
            predicted[j] = state[j] + clamp(drift[j] * h, cap).0 + sq * noise[j];
        }
        // The corrector needs the predictor in the same order as the state;
        // a crossing predictor falls back to the Euler step.
        if heun_scheme && predicted.windows(2).all(|p| p[0] > p[1]) {
            drift_into(predicted, beta, plan.linear[i + 1], drift_end);
            for (d, e) in drift.iter_mut().zip(drift_end.iter()) {
                *d = 0.5 * (*d + e);
            }
        }
        for j in 0..n {
            let (inc, clamped) = clamp(drift[j] * h, cap);
            clamp_events += u64::from(clamped);
            state[j] += inc + sq * noise[j];
        }
        sort_desc(state);
        steps += 1;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(SdeError::NonFinite(x_next));
        }
        if let (Some(acc), Some(w)) = (observed.as_mut(), &plan.weight) {
            let p2_after = p2(state);
            *acc += w[i] * 0.5 * (p2_before + p2_after) * h;
            p2_before = p2_after;
        }
        rec.offer(x_next, state);
    }

    let values = rec.values;
    let mut path = SamplePath {
        grid: cfg.record.clone(),
        values,
        seed,
        stream,
        steps,
        clamp_events,
        observed,
        warning: false,
    };
    path.warning = (n >= 3 && beta < 1.0) || path.clamp_rate() > CLAMP_WARN_RATE;
    Ok(path)
}

/// Drift increment limited to `cap` in magnitude, and whether it was limited.
fn clamp(inc: f64, cap: f64) -> (f64, bool) {
    if inc.abs() <= cap {
        (inc, false)
    } else if inc.is_nan() {
        (0.0, true)
    } else {
        (cap.copysign(inc), true)
    }
}

pub fn simulate_dyson_halfline(cfg: &SdeConfig, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    cfg.validate(Variant::Halfline)?;
    particle_path(cfg, Variant::Halfline, &Plan::new(cfg, Variant::Halfline, None), seed, stream)
}

/// Stationary dynamics `d lambda_j = sqrt 2 dW_j - sqrt(2K) lambda_j dx +
/// beta sum_{j' != j} dx / (lambda_j - lambda_j')`, started from
/// `(2K)^{-1/4}` times a GbE sample at the first record point.
pub fn simulate_dyson_stationary(cfg: &SdeConfig, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    cfg.validate(Variant::Stationary)?;
    particle_path(cfg, Variant::Stationary, &Plan::new(cfg, Variant::Stationary, None), seed, stream)
}

pub fn simulate_dyson_tilted(cfg: &SdeConfig, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    cfg.validate(Variant::Tilted)?;
    let sol = solve_chi(cfg.chi.as_ref().expect("validated"))?;
    particle_path(cfg, Variant::Tilted, &Plan::new(cfg, Variant::Tilted, Some(&sol)), seed, stream)
}

/// Exact transition of the squared Bessel process of dimension `delta`
/// over time `t`: `t` times a noncentral chi-square with noncentrality
/// `l0 / t`, drawn as a Poisson mixture of Gammas.
pub fn besq_step<R: Rng + ?Sized>(l0: f64, delta: f64, t: f64, rng: &mut R) -> f64 {
    noncentral_chi2(delta, l0 / t, rng) * t
}

/// Exact transition of `dL = 2 sqrt(L) dW + (2 alpha - kappa L) dx`.
pub fn cir_step<R: Rng + ?Sized>(l0: f64, alpha: f64, kappa: f64, t: f64, rng: &mut R) -> f64 {
    let decay = (-kappa * t).exp();
    let c = (1.0 - decay) / kappa;
    noncentral_chi2(2.0 * alpha, l0 * decay / c, rng) * c
}

fn noncentral_chi2<R: Rng + ?Sized>(df: f64, noncentrality: f64, rng: &mut R) -> f64 {
    let extra = if noncentrality > 0.0 {
        Poisson::new(noncentrality / 2.0).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    let shape = df / 2.0 + extra;
    if shape <= 0.0 {
        return 0.0;
    }
    2.0 * Gamma::new(shape, 1.0).expect("positive shape").sample(rng)
}

/// `beta`-Dyson motion for `n = 2` as `W +- sqrt(R)` with `R` a squared
/// Bessel process of dimension `beta + 1` (or its stationary CIR analogue
/// when `K` is set). Transitions are exact; the grid only matters for the
/// observed integral.
pub fn simulate_dyson_n2(cfg: &SdeConfig, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    cfg.validate(Variant::N2)?;
    let mut rng = rng::stream(seed, stream);
    let delta = cfg.beta + 1.0;
    let kappa = cfg.k.map(|k| (2.0 * k).sqrt());

    let start = if kappa.is_some() { cfg.record[0] } else { 0.0 };
    let mut must_hit = cfg.record.clone();
    must_hit.push(cfg.horizon());
    let grid = match &cfg.observe {
        Some(c) => {
            must_hit.extend_from_slice(c.breakpoints());
            build_grid(start, &must_hit, cfg.step())
        }
        None => build_grid(start, &must_hit, f64::INFINITY),
    };

    let (mut w, mut r) = match kappa {
        Some(kp) => {
            let z: f64 = rng.sample(StandardNormal);
            let g = Gamma::new(delta / 2.0, 1.0 / kp).expect("positive shape").sample(&mut rng);
            (z / (2.0 * kp).sqrt(), g)
        }
        None => (0.0, 0.0),
    };
    let pair = |w: f64, r: f64| {
        let s = r.max(0.0).sqrt();
        vec![w + s, w - s]
    };
    let mut rec = Recorder::new(&cfg.record);
    rec.offer(start, &pair(w, r));
    let mut observed = cfg.observe.as_ref().map(|_| 0.0);
    let mut steps = 0;
    for seg in grid.windows(2) {
        let (x, x_next) = (seg[0], seg[1]);
        let h = x_next - x;
        let before = 2.0 * (w * w + r);
        let z: f64 = rng.sample(StandardNormal);
        match kappa {
            Some(kp) => {
                let decay = (-kp * h).exp();
                w = w * decay + ((1.0 - decay * decay) / (2.0 * kp)).sqrt() * z;
                r = cir_step(r, delta / 2.0, 2.0 * kp, h, &mut rng);
            }
            None => {
                w += h.sqrt() * z;
                r = besq_step(r, delta, h, &mut rng);
            }
        }
        steps += 1;
        if !(w.is_finite() && r.is_finite()) {
            return Err(SdeError::NonFinite(x_next));
        }
        if let (Some(acc), Some(c)) = (observed.as_mut(), &cfg.observe) {
            *acc += c.value(0.5 * (x + x_next)) * 0.5 * (before + 2.0 * (w * w + r)) * h;
        }
        rec.offer(x_next, &pair(w, r));
    }
    Ok(SamplePath {
        grid: cfg.record.clone(),
        values: rec.values,
        seed,
        stream,
        steps,
        clamp_events: 0,
        observed,
        warning: false,
    })
}

pub fn simulate(variant: Variant, cfg: &SdeConfig, seed: u64, stream: u64) -> Result<SamplePath, SdeError> {
    match variant {
        Variant::Halfline => simulate_dyson_halfline(cfg, seed, stream),
        Variant::Stationary => simulate_dyson_stationary(cfg, seed, stream),
        Variant::Tilted => simulate_dyson_tilted(cfg, seed, stream),
        Variant::N2 => simulate_dyson_n2(cfg, seed, stream),
    }
}

/// Independent paths `0..paths`, each on its own stream.
pub fn simulate_many(
    variant: Variant,
    cfg: &SdeConfig,
    seed: u64,
    paths: usize,
) -> Result<Vec<SamplePath>, SdeError> {
    cfg.validate(variant)?;
    let tilt = match variant {
        Variant::Tilted => Some(solve_chi(cfg.chi.as_ref().expect("validated"))?),
        _ => None,
    };
    let plan = (variant != Variant::N2).then(|| Plan::new(cfg, variant, tilt.as_ref()));
    (0..paths as u64)
        .into_par_iter()
        .map(|stream| match &plan {
            None => simulate_dyson_n2(cfg, seed, stream),
            Some(plan) => particle_path(cfg, variant, plan, seed, stream),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BesqVariant {
    /// Started from 0: `dL = 2 sqrt(L) dW + 2 alpha dx`.
    Halfline,
    /// `dL = 2 sqrt(L) dW - 2 sqrt(2K) L dx + 2 alpha dx`, started from
    /// its invariant law `Gamma(alpha, rate sqrt(2K))`.
    Stationary { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirScheme {
    /// Noncentral chi-square transitions.
    #[default]
    Exact,
    /// Full-truncation Euler with step `dt`.
    FullTruncationEuler,
}

/// One occupation path at the record points, with the number of Euler
/// steps that needed truncation (always 0 for exact transitions).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesqPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub truncations: u64,
}

pub fn simulate_besq(
    delta: f64,
    variant: BesqVariant,
    record: &[f64],
    scheme: CirScheme,
    dt: f64,
    rng: &mut StreamRng,
) -> Result<BesqPath, SdeError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(SdeError::Config(format!("dimension must be >= 0, got {delta}")));
    }
    if record.is_empty() || record.windows(2).any(|w| w[1] < w[0]) {
        return Err(SdeError::Config("record points must be ascending".into()));
    }
    let alpha = delta / 2.0;
    let (mut x, mut l, kappa) = match variant {
        BesqVariant::Halfline => {
            if record[0] < 0.0 {
                return Err(SdeError::Config("record points must be nonnegative".into()));
            }
            (0.0, 0.0, 0.0)
        }
        BesqVariant::Stationary { k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SdeError::Config("K must be positive".into()));
            }
            let rate = (2.0 * k).sqrt();
            let l0 = if alpha > 0.0 {
                Gamma::new(alpha, 1.0 / rate).expect("positive shape").sample(rng)
            } else {
                0.0
            };
            (record[0], l0, 2.0 * rate)
        }
    };
    let mut values = Vec::with_capacity(record.len());
    let mut truncations = 0;
    for &target in record {
        let t = target - x;
        if t > 0.0 {
            l = match (scheme, kappa > 0.0) {
                (CirScheme::Exact, false) => besq_step(l, delta, t, rng),
                (CirScheme::Exact, true) => cir_step(l, alpha, kappa, t, rng),
                (CirScheme::FullTruncationEuler, _) => {
                    let steps = (t / dt).ceil().max(1.0) as usize;
                    let h = t / steps as f64;
                    let mut v = l;
                    for _ in 0..steps {
                        let vp = v.max(0.0);
                        let z: f64 = rng.sample(StandardNormal);
                        v += (delta - kappa * vp) * h + 2.0 * (vp * h).sqrt() * z;
                        if v < 0.0 {
                            truncations += 1;
                        }
                    }
                    v.max(0.0)
                }
            };
            x = target;
        }
        values.push(l);
    }
    Ok(BesqPath { grid: record.to_vec(), values, truncations })
}

/// `d(beta, n)`, the squared-Bessel dimension matching `p_2 / 2`.
pub fn matching_dimension(beta: f64, n: usize) -> f64 {
    dimension_f64(beta, n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_marks() {
        let g = build_grid(0.0, &[0.25, 1.0, 0.25], 0.1);
        assert!(g.contains(&0.25) && g.contains(&1.0));
        assert!(g.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.1 + 1e-12));
        assert_eq!(build_grid(0.0, &[2.0], f64::INFINITY), vec![0.0, 2.0]);
    }

    #[test]
    fn graded_grid_refines_near_the_origin() {
        let dt = 1e-3;
        let g = graded_grid(&[0.5, 1e-4, 1.0], dt);
        assert_eq!(g[..2], [0.0, GRADE * dt]);
        assert!(g.contains(&1e-4) && g.contains(&0.5) && g.last() == Some(&1.0));
        for w in g.windows(2).skip(1) {
            let h = w[1] - w[0];
            assert!(h > 0.0 && h <= dt + 1e-12 && h <= 1.5 * GRADE * w[0] + 1e-15 || w[0] >= dt / GRADE - 1e-12);
        }
        assert!(g.len() < 2000);
    }

    #[test]
    fn config_validation() {
        let cfg = SdeConfig::new(3, -0.5, vec![1.0]);
        assert!(simulate_dyson_halfline(&cfg, 1, 0).is_err());
        let cfg = SdeConfig::new(2, -1.0, vec![1.0]);
        assert!(simulate_dyson_n2(&cfg, 1, 0).is_err());
        let cfg = SdeConfig::new(2, 1.0, vec![1.0, 0.5]);
        assert!(simulate_dyson_halfline(&cfg, 1, 0).is_err());
        let cfg = SdeConfig::new(2, 1.0, vec![1.0]);
        assert!(simulate_dyson_stationary(&cfg, 1, 0).is_err());
        assert!(simulate_dyson_tilted(&cfg, 1, 0).is_err());
    }

    #[test]
    fn paths_are_sorted_and_reproducible() {
        let cfg = SdeConfig::new(3, 2.0, vec![0.3, 1.0]).with_dt(1e-3);
        let a = simulate_dyson_halfline(&cfg, 5, 9).unwrap();
        let b = simulate_dyson_halfline(&cfg, 5, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 2);
        for col in &a.values {
            assert!(col.windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(!a.warning);
    }

    #[test]
    fn n2_bessel_records_every_point() {
        let cfg = SdeConfig::new(2, -0.5, vec![0.0, 0.5, 1.5]);
        let p = simulate_dyson_n2(&cfg, 3, 1).unwrap();
        assert_eq!(p.values.len(), 3);
        assert_eq!(p.values[0], vec![0.0, 0.0]);
        assert_eq!(p.steps, 2);
    }
}
