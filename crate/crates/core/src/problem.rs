//! Constrained cost functions: integer encodings, the general polynomial
//! cost, the portfolio instance, and its diagonal Hamiltonian.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jw::LatticeShape;
use crate::sim::MAX_QUBITS;

pub const INSTANCE_FILE_VERSION: u32 = 1;
pub const DEFAULT_LAMBDA: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingKind {
    Binary,
    Unary,
    Sequential,
    OneHot,
}

/// `z = sum_d f_d x_d` with the bit count needed to reach `max_int`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingScheme {
    pub kind: EncodingKind,
    pub max_int: u64,
    pub weights: Vec<u64>,
}

impl EncodingScheme {
    pub fn new(kind: EncodingKind, max_int: u64) -> Result<Self> {
        if max_int == 0 {
            return Err(Error::Encoding("largest integer must be positive".into()));
        }
        let bits = match kind {
            EncodingKind::Binary => (64 - max_int.leading_zeros()) as u64,
            EncodingKind::Unary => max_int,
            EncodingKind::Sequential => {
                // smallest D with D(D+1)/2 >= I
                let mut d = 0u64;
                while d * (d + 1) / 2 < max_int {
                    d += 1;
                }
                d
            }
            EncodingKind::OneHot => max_int + 1,
        };
        let weights = (1..=bits)
            .map(|d| match kind {
                EncodingKind::Binary => 1u64 << (d - 1),
                EncodingKind::Unary => 1,
                EncodingKind::Sequential | EncodingKind::OneHot => d,
            })
            .collect();
        Ok(Self { kind, max_int, weights })
    }

    pub fn bits(&self) -> usize {
        self.weights.len()
    }

    pub fn decode(&self, row: &[u8]) -> Result<u64> {
        if row.len() != self.bits() {
            return Err(Error::LengthMismatch { expected: self.bits(), actual: row.len() });
        }
        Ok(row.iter().zip(&self.weights).map(|(&x, &f)| u64::from(x) * f).sum())
    }
}

/// Stock position `w_l` encoded by one row of bits; with shorts `w = I/2 - z`.
pub fn position_from_bits(row: &[u8], scheme: &EncodingScheme, short: bool) -> Result<i64> {
    let z = scheme.decode(row)? as i64;
    if !short {
        return Ok(z);
    }
    if scheme.max_int % 2 != 0 {
        return Err(Error::Encoding(format!("short positions need even I, got {}", scheme.max_int)));
    }
    Ok(scheme.max_int as i64 / 2 - z)
}

/// `sum_k sum_<l1..lk> alpha * prod_j z_{l_j}` subject to `sum_{l in V_j} z_l = M_j`.
/// Vertices are 1-based.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolynomialProblem {
    pub num_vertices: usize,
    pub terms: BTreeMap<Vec<usize>, f64>,
    pub constraints: Vec<(Vec<usize>, i64)>,
}

impl PolynomialProblem {
    pub fn new(num_vertices: usize) -> Self {
        Self { num_vertices, ..Default::default() }
    }

    pub fn add_term(&mut self, vertices: Vec<usize>, alpha: f64) -> Result<()> {
        if vertices.is_empty() || vertices.iter().any(|&l| l == 0 || l > self.num_vertices) {
            return Err(Error::OutOfRange(format!("term vertices {vertices:?}")));
        }
        *self.terms.entry(vertices).or_insert(0.0) += alpha;
        Ok(())
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Cost of bit rows `x[l-1][d-1]`.
    pub fn cost(&self, rows: &[Vec<u8>], scheme: &EncodingScheme) -> Result<f64> {
        if scheme.kind == EncodingKind::OneHot {
            return Err(Error::Encoding(
                "one-hot encoding adds a per-variable constraint of its own; use binary, unary or sequential".into(),
            ));
        }
        if rows.len() != self.num_vertices {
            return Err(Error::LengthMismatch { expected: self.num_vertices, actual: rows.len() });
        }
        let z: Vec<f64> = rows.iter().map(|r| scheme.decode(r).map(|v| v as f64)).collect::<Result<_>>()?;
        Ok(self.terms.iter().map(|(ls, a)| a * ls.iter().map(|&l| z[l - 1]).product::<f64>()).sum())
    }

    pub fn is_feasible(&self, rows: &[Vec<u8>], scheme: &EncodingScheme) -> Result<bool> {
        for (subset, target) in &self.constraints {
            let mut total = 0i64;
            for &l in subset {
                total += scheme.decode(&rows[l - 1])? as i64;
            }
            if total != *target {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Parameters of the seeded factor risk model behind [`generate_instance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub factors: usize,
    pub loading_scale: f64,
    pub idiosyncratic: f64,
    pub mu_mean: f64,
    pub mu_std: f64,
}

impl Default for RiskModel {
    fn default() -> Self {
        Self { factors: 2, loading_scale: 0.1, idiosyncratic: 0.01, mu_mean: 0.01, mu_std: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioInstance {
    pub version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "M")]
    pub m: i64,
    pub lambda: f64,
    /// Row-major `N x N` covariance.
    pub sigma: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl PortfolioInstance {
    pub fn new(n: usize, d: usize, m: i64, lambda: f64, sigma: Vec<Vec<f64>>, mu: Vec<f64>) -> Result<Self> {
        let inst = Self { version: INSTANCE_FILE_VERSION, n, d, m, lambda, sigma, mu, seed: None, comment: None };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.version != INSTANCE_FILE_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        LatticeShape::new(self.n, self.d)?;
        if self.d % 2 != 0 {
            return bad(format!("D must be even, got {}", self.d));
        }
        let half = (self.n * self.d / 2) as i64;
        if self.m == 0 || self.m.abs() > half {
            return bad(format!("need 0 < |M| <= ND/2 = {half}, got M={}", self.m));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda must lie in [0, 1], got {}", self.lambda));
        }
        if self.sigma.len() != self.n || self.sigma.iter().any(|r| r.len() != self.n) || self.mu.len() != self.n {
            return bad(format!("sigma must be {0}x{0} and mu length {0}", self.n));
        }
        if self.sigma.iter().flatten().chain(&self.mu).any(|v| !v.is_finite()) {
            return bad("non-finite entries in sigma or mu".into());
        }
        for i in 0..self.n {
            for j in 0..i {
                if (self.sigma[i][j] - self.sigma[j][i]).abs() > 1e-12 {
                    return bad(format!("sigma not symmetric at ({}, {})", i + 1, j + 1));
                }
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> LatticeShape {
        LatticeShape { n: self.n, d: self.d }
    }

    pub fn num_qubits(&self) -> usize {
        self.n * self.d
    }

    /// Particle number `M' = ND/2 - M`.
    pub fn m_prime(&self) -> usize {
        (self.num_qubits() as i64 / 2 - self.m) as usize
    }

    fn risk_scale(&self) -> f64 {
        self.lambda / (self.m * self.m) as f64
    }

    fn return_scale(&self) -> f64 {
        (1.0 - self.lambda) / self.m as f64
    }

    /// Cost from the per-stock sums `y_l = sum_d (x_{l,d} - 1/2)`.
    fn cost_from_sums(&self, y: &[f64]) -> f64 {
        let mut risk = 0.0;
        for (l, row) in self.sigma.iter().enumerate() {
            risk += y[l] * row.iter().zip(y).map(|(s, v)| s * v).sum::<f64>();
        }
        let ret: f64 = self.mu.iter().zip(y).map(|(m, v)| m * v).sum();
        self.risk_scale() * risk + self.return_scale() * ret
    }

    /// Binary-form cost of bit rows `x[l-1][d-1]`.
    pub fn cost(&self, rows: &[Vec<u8>]) -> Result<f64> {
        if rows.len() != self.n || rows.iter().any(|r| r.len() != self.d) {
            return Err(Error::LengthMismatch { expected: self.n * self.d, actual: rows.iter().map(Vec::len).sum() });
        }
        let y: Vec<f64> = rows.iter().map(|r| r.iter().map(|&b| f64::from(b) - 0.5).sum()).collect();
        Ok(self.cost_from_sums(&y))
    }

    /// Bit rows of a basis index under the snake ordering.
    pub fn rows_of_index(&self, x: usize) -> Vec<Vec<u8>> {
        let shape = self.shape();
        (1..=self.n)
            .map(|l| {
                (1..=self.d).map(|d| ((x >> (shape.index_unchecked(l, d) - 1)) & 1) as u8).collect()
            })
            .collect()
    }

    /// Unary-with-shorts encoding as a polynomial over `z_l = sum_d x_{l,d}`,
    /// plus the constant dropped from it: `cost = poly(z) + constant`.
    pub fn as_polynomial(&self) -> (PolynomialProblem, f64) {
        let half_d = self.d as f64 / 2.0;
        let mut p = PolynomialProblem::new(self.n);
        let (a, b) = (self.risk_scale(), self.return_scale());
        let mut constant = 0.0;
        for l in 0..self.n {
            for k in 0..self.n {
                let s = self.sigma[l][k];
                // w = D/2 - z;  s w_l w_k = s z_l z_k - s D/2 (z_l + z_k) + s D^2/4
                p.add_term(vec![l + 1, k + 1], a * s).expect("in range");
                p.add_term(vec![l + 1], -a * s * half_d).expect("in range");
                p.add_term(vec![k + 1], -a * s * half_d).expect("in range");
                constant += a * s * half_d * half_d;
            }
            // -b mu w = -b mu (D/2 - z)
            p.add_term(vec![l + 1], b * self.mu[l]).expect("in range");
            constant -= b * self.mu[l] * half_d;
        }
        p.constraints.push(((1..=self.n).collect(), self.m_prime() as i64));
        (p, constant)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let inst: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}

/// Seeded factor-model instance: `sigma = F F^T + diag(noise)`, `mu ~ Normal`.
pub fn generate_instance(
    seed: u64,
    n: usize,
    d: usize,
    m: i64,
    lambda: f64,
    model: &RiskModel,
) -> Result<PortfolioInstance> {
    if model.factors == 0 || model.loading_scale < 0.0 || model.idiosyncratic < 0.0 || model.mu_std < 0.0 {
        return Err(Error::InvalidArgument(format!("bad risk model {model:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loading = Normal::new(0.0, model.loading_scale).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let f: Vec<Vec<f64>> = (0..n).map(|_| (0..model.factors).map(|_| loading.sample(&mut rng)).collect()).collect();
    let noise = Uniform::new_inclusive(0.0, model.idiosyncratic).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut sigma = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = f[i].iter().zip(&f[j]).map(|(a, b)| a * b).sum();
            sigma[i][j] = v;
            sigma[j][i] = v;
        }
    }
    for (i, row) in sigma.iter_mut().enumerate() {
        row[i] += noise.sample(&mut rng);
    }
    let ret = Normal::new(model.mu_mean, model.mu_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mu = (0..n).map(|_| ret.sample(&mut rng)).collect();
    let mut inst = PortfolioInstance::new(n, d, m, lambda, sigma, mu)?;
    inst.seed = Some(seed);
    Ok(inst)
}

/// Diagonal of `H_p` over all `2^n` strings plus feasible-sector extrema.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalHamiltonian {
    pub energies: Vec<f64>,
    pub m_prime: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub w: f64,
    /// All feasible minimizers, ascending basis index.
    pub argmin: Vec<usize>,
}

impl DiagonalHamiltonian {
    /// Extrema are taken over strings of Hamming weight `m_prime`.
    pub fn from_energies(energies: Vec<f64>, m_prime: usize) -> Result<Self> {
        if !energies.len().is_power_of_two() {
            return Err(Error::InvalidArgument("energy table length must be a power of two".into()));
        }
        let (mut e_min, mut e_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for (x, &e) in energies.iter().enumerate() {
            if x.count_ones() as usize == m_prime {
                if !e.is_finite() {
                    return Err(Error::NonFinite("feasible-sector enumeration"));
                }
                e_min = e_min.min(e);
                e_max = e_max.max(e);
            }
        }
        if !e_min.is_finite() {
            return Err(Error::InvalidArgument(format!("no strings of weight {m_prime}")));
        }
        let argmin = energies
            .iter()
            .enumerate()
            .filter(|(x, e)| x.count_ones() as usize == m_prime && **e == e_min)
            .map(|(x, _)| x)
            .collect();
        Ok(Self { energies, m_prime, e_min, e_max, w: e_max - e_min, argmin })
    }

    pub fn num_qubits(&self) -> usize {
        self.energies.len().trailing_zeros() as usize
    }

    pub fn is_feasible(&self, x: usize) -> bool {
        x.count_ones() as usize == self.m_prime
    }

    /// Feasible basis indices, ascending.
    pub fn feasible_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.energies.len()).filter(move |&x| self.is_feasible(x))
    }
}

/// Energies of every basis string of `inst` and the feasible-sector oracle.
pub fn build_diagonal(inst: &PortfolioInstance) -> Result<DiagonalHamiltonian> {
    let n = inst.num_qubits();
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits(n));
    }
    let shape = inst.shape();
    let masks: Vec<usize> = (1..=inst.n)
        .map(|l| (1..=inst.d).map(|d| 1usize << (shape.index_unchecked(l, d) - 1)).sum())
        .collect();
    let half_d = inst.d as f64 / 2.0;
    let mut y = vec![0.0; inst.n];
    let energies = (0..1usize << n)
        .map(|x| {
            for (yl, mask) in y.iter_mut().zip(&masks) {
                *yl = (x & mask).count_ones() as f64 - half_d;
            }
            inst.cost_from_sums(&y)
        })
        .collect();
    DiagonalHamiltonian::from_energies(energies, inst.m_prime())
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}
