//! Finite electrical networks: massive Green function, scalar GFF, random
//! walk loop-soup occupation fields and the two-particle eigenvalue field
//! `lambda = phi / sqrt 2 +- sqrt(L)`.

use crate::algebra::{perm_alpha, AlgebraError, SquareMatrix};
use crate::rng::StreamRng;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("network is not connected")]
    Disconnected,
    #[error("killing measure is identically zero")]
    NoKilling,
    #[error("operator is not positive definite")]
    NotPositiveDefinite,
    #[error("Green matrix residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("spectral radius {0} of the jump matrix is not below 1")]
    Recurrent(f64),
    #[error("loop length cutoff {k_max} leaves tail mass {tail:e}")]
    Truncation { k_max: usize, tail: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("malformed JSON: {0}")]
    Json(String),
}

/// Relative residual accepted for `(-Delta + K) G = I`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Bound on the Poisson mass of loop skeletons longer than the cutoff.
pub const LOOP_TAIL_TOLERANCE: f64 = 1e-8;
/// Largest number of matrix entries stored for jump-matrix powers.
const MAX_POWER_ENTRIES: usize = 1 << 26;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: VertexId,
    pub v: VertexId,
    pub c: f64,
}

/// Vertex label; JSON may use strings or integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Int(i64),
    Name(String),
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexId::Int(i) => write!(f, "{i}"),
            VertexId::Name(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NetworkSpec {
    vertices: Vec<VertexId>,
    edges: Vec<EdgeSpec>,
    #[serde(default)]
    killing: BTreeMap<String, f64>,
}

/// Connected graph with conductances and a killing measure. Vertices are
/// indexed `0..len()` in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkSpec", into = "NetworkSpec")]
pub struct Network {
    vertices: Vec<VertexId>,
    edges: Vec<(usize, usize, f64)>,
    killing: Vec<f64>,
}

impl TryFrom<NetworkSpec> for Network {
    type Error = NetworkError;

    fn try_from(spec: NetworkSpec) -> Result<Self, NetworkError> {
        let index: HashMap<String, usize> =
            spec.vertices.iter().enumerate().map(|(i, v)| (v.to_string(), i)).collect();
        if index.len() != spec.vertices.len() {
            return Err(NetworkError::Invalid("duplicate vertex id".into()));
        }
        let lookup = |v: &VertexId| {
            index.get(&v.to_string()).copied().ok_or_else(|| NetworkError::UnknownVertex(v.to_string()))
        };
        let edges = spec
            .edges
            .iter()
            .map(|e| Ok((lookup(&e.u)?, lookup(&e.v)?, e.c)))
            .collect::<Result<Vec<_>, NetworkError>>()?;
        let mut killing = vec![0.0; spec.vertices.len()];
        for (name, &k) in &spec.killing {
            let i = index.get(name).ok_or_else(|| NetworkError::UnknownVertex(name.clone()))?;
            killing[*i] = k;
        }
        Network::with_labels(spec.vertices, edges, killing)
    }
}

impl From<Network> for NetworkSpec {
    fn from(net: Network) -> Self {
        let edges = net
            .edges
            .iter()
            .map(|&(u, v, c)| EdgeSpec { u: net.vertices[u].clone(), v: net.vertices[v].clone(), c })
            .collect();
        let killing = net
            .vertices
            .iter()
            .zip(&net.killing)
            .filter(|(_, &k)| k != 0.0)
            .map(|(v, &k)| (v.to_string(), k))
            .collect();
        NetworkSpec { vertices: net.vertices, edges, killing }
    }
}

impl std::str::FromStr for Network {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, NetworkError> {
        serde_json::from_str(s).map_err(|e| NetworkError::Json(e.to_string()))
    }
}

impl Network {
    /// Vertices labelled `0..n`.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>, killing: Vec<f64>) -> Result<Self, NetworkError> {
        let labels = (0..n as i64).map(VertexId::Int).collect();
        Self::with_labels(labels, edges, killing)
    }

    fn with_labels(
        vertices: Vec<VertexId>,
        edges: Vec<(usize, usize, f64)>,
        killing: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let n = vertices.len();
        if n == 0 {
            return Err(NetworkError::Invalid("no vertices".into()));
        }
        if killing.len() != n {
            return Err(NetworkError::Invalid(format!("{} killing values for {n} vertices", killing.len())));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v, c) in &edges {
            if u >= n || v >= n {
                return Err(NetworkError::Invalid(format!("edge ({u},{v}) out of range")));
            }
            if u == v {
                return Err(NetworkError::Invalid(format!("self-loop at {}", vertices[u])));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(NetworkError::Invalid(format!("multiple edges between {} and {}", vertices[u], vertices[v])));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(NetworkError::Invalid(format!("conductance must be positive, got {c}")));
            }
        }
        if killing.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
            return Err(NetworkError::Invalid("killing must be finite and nonnegative".into()));
        }
        if killing.iter().all(|&k| k == 0.0) {
            return Err(NetworkError::NoKilling);
        }
        let net = Network { vertices, edges, killing };
        if !net.is_connected() {
            return Err(NetworkError::Disconnected);
        }
        Ok(net)
    }

    pub fn single(kappa: f64) -> Result<Self, NetworkError> {
        Self::new(1, vec![], vec![kappa])
    }

    pub fn path(n: usize, c: f64, killing: Vec<f64>) -> Result<Self, NetworkError> {
        Self::new(n, (1..n).map(|i| (i - 1, i, c)).collect(), killing)
    }

    pub fn cycle(n: usize, c: f64, killing: Vec<f64>) -> Result<Self, NetworkError> {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i, c)).collect();
        if n > 2 {
            edges.push((n - 1, 0, c));
        }
        Self::new(n, edges, killing)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.to_string() == id)
    }

    pub fn with_killing(&self, killing: Vec<f64>) -> Result<Self, NetworkError> {
        Self::with_labels(self.vertices.clone(), self.edges.clone(), killing)
    }

    fn is_connected(&self) -> bool {
        let n = self.len();
        let mut adj = vec![Vec::new(); n];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Conductance matrix `C(x,y)`, zero off the edge set.
    pub fn conductances(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut c = DMatrix::zeros(n, n);
        for &(u, v, w) in &self.edges {
            c[(u, v)] = w;
            c[(v, u)] = w;
        }
        c
    }

    /// `-Delta + K`.
    pub fn operator(&self) -> DMatrix<f64> {
        self.operator_with(&vec![0.0; self.len()])
    }

    /// `-Delta + K - chi`.
    pub fn operator_with(&self, chi: &[f64]) -> DMatrix<f64> {
        let mut a = -self.conductances();
        for x in 0..self.len() {
            a[(x, x)] = self.exit_rate(x) - chi[x];
        }
        a
    }

    /// `K(x) + sum_y C(x,y)`, the holding rate of the walk at `x`.
    pub fn exit_rate(&self, x: usize) -> f64 {
        self.killing[x]
            + self.edges.iter().filter(|e| e.0 == x || e.1 == x).map(|e| e.2).sum::<f64>()
    }

    /// `(Delta f)(x) = sum_{y ~ x} C(x,y) (f(y) - f(x))`, by direct summation.
    pub fn laplacian_apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for &(u, v, c) in &self.edges {
            out[u] += c * (f[v] - f[u]);
            out[v] += c * (f[u] - f[v]);
        }
        out
    }
}

/// `ln det(-Delta + K - chi)`, or an error when the operator is not
/// positive definite.
pub fn log_det(net: &Network, chi: &[f64]) -> Result<f64, NetworkError> {
    check_len(net, chi)?;
    let chol = Cholesky::new(net.operator_with(chi)).ok_or(NetworkError::NotPositiveDefinite)?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// `det(-Delta + K) / det(-Delta + K - chi)`, the Laplace transform of the
/// 1-permanental field at `chi`.
pub fn det_ratio(net: &Network, chi: &[f64]) -> Result<f64, NetworkError> {
    Ok((log_det(net, &vec![0.0; net.len()])? - log_det(net, chi)?).exp())
}

fn check_len(net: &Network, v: &[f64]) -> Result<(), NetworkError> {
    if v.len() != net.len() {
        return Err(NetworkError::InvalidParameter(format!(
            "vector of length {} on {} vertices",
            v.len(),
            net.len()
        )));
    }
    Ok(())
}

/// Dense `G = (-Delta + K)^{-1}` with a Cholesky factor for sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenMatrix {
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
    residual: f64,
}

impl GreenMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.matrix[(x, y)]
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |(-Delta + K) G - I|` relative to `max |G|`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Centered Gaussian vector with covariance `G`.
    pub fn sample_gff<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        (&self.factor * z).iter().copied().collect()
    }
}

pub fn build_green(net: &Network) -> Result<GreenMatrix, NetworkError> {
    let a = net.operator();
    let chol = Cholesky::new(a.clone()).ok_or(NetworkError::NotPositiveDefinite)?;
    let g = chol.inverse();
    let g = (&g + g.transpose()) * 0.5;
    let err = (&a * &g - DMatrix::identity(a.nrows(), a.ncols())).amax();
    let residual = err / g.amax().max(1.0 / a.amax());
    if residual > RESIDUAL_TOLERANCE {
        return Err(NetworkError::Residual(residual));
    }
    let factor = Cholesky::new(g.clone()).ok_or(NetworkError::NotPositiveDefinite)?.l();
    Ok(GreenMatrix { matrix: g, factor, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    Gff,
    Occupation { alpha: f64 },
    LambdaPair { beta: f64 },
}

/// Vertex-indexed field values; a lambda pair stores `[lambda_1, lambda_2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub kind: FieldKind,
    pub components: Vec<Vec<f64>>,
}

impl FieldSample {
    pub fn values(&self) -> &[f64] {
        &self.components[0]
    }

    /// `(lambda_1(x), lambda_2(x))` for a lambda pair.
    pub fn at(&self, x: usize) -> Vec<f64> {
        self.components.iter().map(|c| c[x]).collect()
    }

    /// `p_q(lambda(x))`, summing over components.
    pub fn power_sum(&self, x: usize, q: u32) -> f64 {
        self.components.iter().map(|c| c[x].powi(q as i32)).sum()
    }
}

pub fn sample_gff(net: &Network, rng: &mut StreamRng) -> Result<FieldSample, NetworkError> {
    let g = build_green(net)?;
    Ok(FieldSample { kind: FieldKind::Gff, components: vec![g.sample_gff(rng)] })
}

/// Sampler of the occupation field of a continuous-time random walk loop
/// soup of intensity `alpha`.
///
/// Loops that never jump contribute `Gamma(alpha, rate lambda_x)` at each
/// vertex. Loops with `k >= 2` jumps are drawn as rooted discrete skeletons
/// from a Poisson measure of mass `alpha tr(P^k) / k`, `P(x,y) = C(x,y) /
/// lambda_x`; every visit adds an `Exp(lambda_x)` holding time. Lengths
/// above `k_max` are dropped, with the dropped mass bounded by `tail`.
#[derive(Debug, Clone)]
pub struct LoopSoup {
    alpha: f64,
    rates: Vec<f64>,
    jump: DMatrix<f64>,
    powers: Vec<DMatrix<f64>>,
    masses: Vec<f64>,
    spectral_radius: f64,
    tail: f64,
}

impl LoopSoup {
    pub fn new(net: &Network, alpha: f64) -> Result<Self, NetworkError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(NetworkError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let n = net.len();
        let rates: Vec<f64> = (0..n).map(|x| net.exit_rate(x)).collect();
        let c = net.conductances();
        let jump = DMatrix::from_fn(n, n, |x, y| c[(x, y)] / rates[x]);
        // P is similar to the symmetric D^{-1/2} C D^{-1/2}.
        let sym = DMatrix::from_fn(n, n, |x, y| c[(x, y)] / (rates[x] * rates[y]).sqrt());
        let rho = SymmetricEigen::new(sym).eigenvalues.amax();
        if rho >= 1.0 {
            return Err(NetworkError::Recurrent(rho));
        }
        let tail_after = |k: usize| {
            if rho == 0.0 {
                0.0
            } else {
                alpha * n as f64 * rho.powi(k as i32 + 1) / ((k as f64 + 1.0) * (1.0 - rho))
            }
        };
        let mut k_max = 0;
        while tail_after(k_max) >= LOOP_TAIL_TOLERANCE {
            k_max += 1;
            if (k_max + 1) * n * n > MAX_POWER_ENTRIES {
                return Err(NetworkError::Truncation { k_max, tail: tail_after(k_max) });
            }
        }
        let mut powers = Vec::with_capacity(k_max + 1);
        powers.push(DMatrix::identity(n, n));
        for k in 1..=k_max {
            let next = &powers[k - 1] * &jump;
            powers.push(next);
        }
        let masses = (0..=k_max)
            .map(|k| if k < 2 { 0.0 } else { alpha * powers[k].trace() / k as f64 })
            .collect();
        Ok(LoopSoup { alpha, rates, jump, powers, masses, spectral_radius: rho, tail: tail_after(k_max) })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k_max(&self) -> usize {
        self.powers.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// Expected number of nontrivial loops, `alpha sum_k tr(P^k) / k` up to
    /// the cutoff.
    pub fn skeleton_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Visit counts of all skeletons in one soup.
    pub fn sample_visits<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u64> {
        let n = self.rates.len();
        let mut visits = vec![0u64; n];
        let mut weights = vec![0.0; n];
        for (k, &mass) in self.masses.iter().enumerate() {
            if mass <= 0.0 {
                continue;
            }
            let count = Poisson::new(mass).expect("positive mass").sample(rng) as u64;
            for _ in 0..count {
                let pk = &self.powers[k];
                for (x, w) in weights.iter_mut().enumerate() {
                    *w = pk[(x, x)];
                }
                let root = pick(&weights, rng);
                let mut x = root;
                for step in 0..k {
                    visits[x] += 1;
                    if step + 1 == k {
                        break;
                    }
                    let rest = &self.powers[k - step - 1];
                    for (y, w) in weights.iter_mut().enumerate() {
                        *w = self.jump[(x, y)] * rest[(y, root)];
                    }
                    x = pick(&weights, rng);
                }
            }
        }
        visits
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let visits = self.sample_visits(rng);
        visits
            .iter()
            .zip(&self.rates)
            .map(|(&v, &rate)| Gamma::new(self.alpha + v as f64, 1.0 / rate).expect("positive shape").sample(rng))
            .collect()
    }
}

fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

pub fn sample_loop_soup_occupation(
    net: &Network,
    alpha: f64,
    rng: &mut StreamRng,
) -> Result<FieldSample, NetworkError> {
    let soup = LoopSoup::new(net, alpha)?;
    Ok(FieldSample { kind: FieldKind::Occupation { alpha }, components: vec![soup.sample(rng)] })
}

/// `lambda_{1,2} = phi / sqrt 2 +- sqrt(L)` with `phi` a GFF and `L` an
/// independent `(alpha - 1/2)`-occupation field, `alpha = (beta + 2) / 2`.
#[derive(Debug, Clone)]
pub struct LambdaSampler {
    beta: f64,
    green: GreenMatrix,
    soup: LoopSoup,
}

impl LambdaSampler {
    pub fn new(net: &Network, beta: f64) -> Result<Self, NetworkError> {
        if !(beta > -1.0 && beta.is_finite()) {
            return Err(NetworkError::InvalidParameter(format!("beta must exceed -1, got {beta}")));
        }
        let alpha = (beta + 2.0) / 2.0;
        Ok(LambdaSampler { beta, green: build_green(net)?, soup: LoopSoup::new(net, alpha - 0.5)? })
    }

    pub fn green(&self) -> &GreenMatrix {
        &self.green
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldSample {
        let phi = self.green.sample_gff(rng);
        let occ = self.soup.sample(rng);
        let (l1, l2) = phi
            .iter()
            .zip(&occ)
            .map(|(p, l)| (p / 2f64.sqrt() + l.sqrt(), p / 2f64.sqrt() - l.sqrt()))
            .unzip();
        FieldSample { kind: FieldKind::LambdaPair { beta: self.beta }, components: vec![l1, l2] }
    }
}

pub fn build_lambda_n2(net: &Network, beta: f64, rng: &mut StreamRng) -> Result<FieldSample, NetworkError> {
    Ok(LambdaSampler::new(net, beta)?.sample(rng))
}

/// Eigenvalue field of `[[phi_1, sqrt L], [sqrt L, phi_2]]` with two
/// independent GFFs and an `(alpha - 1)`-occupation field; requires
/// `beta > 0`.
#[derive(Debug, Clone)]
pub struct MatrixFieldSampler {
    beta: f64,
    green: GreenMatrix,
    soup: LoopSoup,
}

/// One draw of the matrix field with its entry fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFieldSample {
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    pub occupation: Vec<f64>,
    pub eigenvalues: FieldSample,
}

impl MatrixFieldSampler {
    pub fn new(net: &Network, beta: f64) -> Result<Self, NetworkError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(NetworkError::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        let alpha = (beta + 2.0) / 2.0;
        Ok(MatrixFieldSampler { beta, green: build_green(net)?, soup: LoopSoup::new(net, alpha - 1.0)? })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> MatrixFieldSample {
        let phi1 = self.green.sample_gff(rng);
        let phi2 = self.green.sample_gff(rng);
        let occupation = self.soup.sample(rng);
        let mut l1 = Vec::with_capacity(phi1.len());
        let mut l2 = Vec::with_capacity(phi1.len());
        for x in 0..phi1.len() {
            let mid = 0.5 * (phi1[x] + phi2[x]);
            let half = 0.5 * (phi2[x] - phi1[x]);
            let r = (occupation[x] + half * half).sqrt();
            l1.push(mid + r);
            l2.push(mid - r);
        }
        let eigenvalues = FieldSample { kind: FieldKind::LambdaPair { beta: self.beta }, components: vec![l1, l2] };
        MatrixFieldSample { phi1, phi2, occupation, eigenvalues }
    }
}

/// Density of the lambda field under killing `K~` relative to `K`:
/// `(det(-Delta + K~) / det(-Delta + K))^{(beta+2)/2} exp(-1/2 sum (K~ - K) p_2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightDensity {
    log_prefactor: f64,
    delta_k: Vec<f64>,
}

impl ReweightDensity {
    pub fn log_density(&self, lambda: &FieldSample) -> f64 {
        let quad: f64 = self.delta_k.iter().enumerate().map(|(x, dk)| dk * lambda.power_sum(x, 2)).sum();
        self.log_prefactor - 0.5 * quad
    }

    pub fn density(&self, lambda: &FieldSample) -> f64 {
        self.log_density(lambda).exp()
    }
}

pub fn reweight_killing(net: &Network, killing: &[f64], beta: f64) -> Result<ReweightDensity, NetworkError> {
    check_len(net, killing)?;
    let other = net.with_killing(killing.to_vec())?;
    let zero = vec![0.0; net.len()];
    let log_ratio = log_det(&other, &zero)? - log_det(net, &zero)?;
    Ok(ReweightDensity {
        log_prefactor: 0.5 * (beta + 2.0) * log_ratio,
        delta_k: killing.iter().zip(net.killing()).map(|(a, b)| a - b).collect(),
    })
}

/// `Perm_alpha` of `G` restricted to the given vertices (with repetition).
pub fn permanental_moment(green: &GreenMatrix, points: &[usize], alpha: f64) -> Result<f64, NetworkError> {
    let m = SquareMatrix::from_fn(points.len(), |i, j| green.get(points[i], points[j]));
    Ok(perm_alpha(&m, &alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn validation() {
        assert_eq!(Network::new(2, vec![], vec![1.0, 1.0]), Err(NetworkError::Disconnected));
        assert_eq!(Network::new(1, vec![], vec![0.0]), Err(NetworkError::NoKilling));
        assert!(Network::new(2, vec![(0, 0, 1.0)], vec![1.0, 1.0]).is_err());
        assert!(Network::new(2, vec![(0, 1, 1.0), (1, 0, 2.0)], vec![1.0, 1.0]).is_err());
        assert!(Network::new(2, vec![(0, 1, -1.0)], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"vertices":["a","b",3],"edges":[{"u":"a","v":"b","c":1.5},{"u":"b","v":3,"c":2}],"killing":{"a":0.5}}"#;
        let net: Network = s.parse().unwrap();
        assert_eq!(net.len(), 3);
        assert_eq!(net.killing(), &[0.5, 0.0, 0.0]);
        let back: Network = serde_json::to_string(&net).unwrap().parse().unwrap();
        assert_eq!(back, net);
        let err = r#"{"vertices":["a"],"edges":[],"killing":{"z":1}}"#.parse::<Network>().unwrap_err();
        assert!(err.to_string().contains("unknown vertex"), "{err}");
    }

    #[test]
    fn single_vertex_green() {
        let g = build_green(&Network::single(2.5).unwrap()).unwrap();
        assert!((g.get(0, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn jump_free_soup() {
        let soup = LoopSoup::new(&Network::single(2.0).unwrap(), 0.7).unwrap();
        assert_eq!(soup.k_max(), 0);
        assert_eq!(soup.skeleton_mass(), 0.0);
        assert!(soup.sample(&mut stream(1, 0))[0] > 0.0);
    }

    #[test]
    fn skeleton_mass_is_log_det() {
        let net = Network::cycle(4, 1.0, vec![0.3, 0.1, 0.0, 0.2]).unwrap();
        let soup = LoopSoup::new(&net, 1.0).unwrap();
        let n = net.len();
        let p = DMatrix::from_fn(n, n, |x, y| net.conductances()[(x, y)] / net.exit_rate(x));
        let ld = (DMatrix::identity(n, n) - p).determinant().ln();
        assert!((soup.skeleton_mass() + ld).abs() < 1e-7, "{} {}", soup.skeleton_mass(), -ld);
    }

    #[test]
    fn lambda_ordering() {
        let net = Network::path(3, 1.0, vec![1.0, 0.0, 1.0]).unwrap();
        let s = build_lambda_n2(&net, -0.5, &mut stream(3, 0)).unwrap();
        assert!((0..3).all(|x| s.components[0][x] >= s.components[1][x]));
    }

    #[test]
    fn reweight_identity() {
        let net = Network::path(2, 1.0, vec![1.0, 2.0]).unwrap();
        let d = reweight_killing(&net, &[1.0, 2.0], 1.0).unwrap();
        let s = build_lambda_n2(&net, 1.0, &mut stream(1, 1)).unwrap();
        assert!((d.density(&s) - 1.0).abs() < 1e-12);
    }
}
