//! Energy distributions, residual energies, box statistics, power-law fits
//! and gate-count certification.

use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::ansatz::{ComponentCircuits, ComponentCounts};
use crate::error::{Error, Result};
use crate::jw::LatticeShape;
use crate::problem::DiagonalHamiltonian;
use crate::sim::{GateCounts, StateVector};

/// Probability mass over `E - E_min`, kept separately for feasible and
/// infeasible strings and sorted by energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDistribution {
    pub feasible: Vec<(f64, f64)>,
    pub infeasible: Vec<(f64, f64)>,
    pub feasibility: f64,
    pub e_min: f64,
    pub w: f64,
}

impl EnergyDistribution {
    /// Exact distribution of `state` measured in the computational basis.
    pub fn from_state(state: &StateVector, ham: &DiagonalHamiltonian) -> Result<Self> {
        Self::from_state_with(state, ham, &ham.energies)
    }

    /// As [`Self::from_state`], with `energies` assigned to every string
    /// (they must agree with `ham` on the feasible sector).
    pub fn from_state_with(state: &StateVector, ham: &DiagonalHamiltonian, energies: &[f64]) -> Result<Self> {
        if state.dim() != ham.energies.len() || energies.len() != ham.energies.len() {
            return Err(Error::LengthMismatch { expected: ham.energies.len(), actual: state.dim() });
        }
        Self::from_probabilities(&state.probabilities(), ham, energies)
    }

    fn from_probabilities(probs: &[f64], ham: &DiagonalHamiltonian, energies: &[f64]) -> Result<Self> {
        let mut feasible = Vec::new();
        let mut infeasible = Vec::new();
        for (x, &p) in probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let point = (energies[x] - ham.e_min, p);
            if ham.is_feasible(x) {
                feasible.push(point);
            } else {
                infeasible.push(point);
            }
        }
        feasible.sort_by(|a, b| a.0.total_cmp(&b.0));
        infeasible.sort_by(|a, b| a.0.total_cmp(&b.0));
        let feasibility = feasible.iter().map(|p| p.1).sum();
        Ok(Self { feasible, infeasible, feasibility, e_min: ham.e_min, w: ham.w })
    }

    /// Empirical distribution of measurement `counts` per basis string.
    pub fn from_counts(counts: &[u64], ham: &DiagonalHamiltonian, energies: &[f64]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidArgument("no shots".into()));
        }
        let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self::from_probabilities(&probs, ham, energies)
    }

    /// `F(E)`: feasible mass with `E' - E_min <= e`.
    pub fn f_of_e(&self, e: f64) -> f64 {
        let k = self.feasible.partition_point(|p| p.0 <= e);
        self.feasible[..k].iter().map(|p| p.1).sum()
    }

    /// Mean of `E - E_min` over all strings.
    pub fn mean(&self) -> f64 {
        self.feasible.iter().chain(&self.infeasible).map(|(e, p)| e * p).sum()
    }

    /// `int_0^W (1 - F(E)) dE` evaluated segment by segment.
    pub fn integral_of_complement(&self) -> f64 {
        let mut area = 0.0;
        let mut f = 0.0;
        let mut at = 0.0;
        for &(e, p) in &self.feasible {
            let e = e.clamp(0.0, self.w);
            area += (1.0 - f) * (e - at);
            at = e;
            f += p;
        }
        area + (1.0 - f) * (self.w - at)
    }

    /// Every string with its probability, feasible and infeasible together.
    pub fn all_points(&self) -> Vec<(f64, f64)> {
        let mut v: Vec<(f64, f64)> = self.feasible.iter().chain(&self.infeasible).copied().collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

/// `E_p - E_min`.
pub fn residual_energy(e_p: f64, ham: &DiagonalHamiltonian) -> f64 {
    e_p - ham.e_min
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub w5: f64,
    pub w95: f64,
    pub mean: f64,
}

impl BoxStats {
    /// Sample quantiles by linear interpolation between order statistics.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("box statistics of an empty sample".into()));
        }
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Ok(Self {
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            w5: q(0.05),
            w95: q(0.95),
            mean: v.iter().sum::<f64>() / v.len() as f64,
        })
    }

    /// Quantiles of a discrete distribution: the smallest value whose
    /// cumulative weight reaches the level.
    pub fn from_weighted(points: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = points.iter().map(|p| p.1).sum();
        if points.is_empty() || !(total > 0.0) {
            return Err(Error::InvalidArgument("box statistics of an empty distribution".into()));
        }
        let mut v = points.to_vec();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let q = |level: f64| {
            let target = level * total;
            let mut acc = 0.0;
            for &(e, p) in &v {
                acc += p;
                if acc >= target * (1.0 - 1e-12) {
                    return e;
                }
            }
            v[v.len() - 1].0
        };
        Ok(Self {
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            w5: q(0.05),
            w95: q(0.95),
            mean: v.iter().map(|(e, p)| e * p).sum::<f64>() / total,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            q1: self.q1 * factor,
            median: self.median * factor,
            q3: self.q3 * factor,
            w5: self.w5 * factor,
            w95: self.w95 * factor,
            mean: self.mean * factor,
        }
    }
}

/// Least-squares slope of `ln y` against `ln x` over points with `x` in `window`.
pub fn power_law_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<f64> {
    let sel: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 >= window.0 && p.0 <= window.1).collect();
    if sel.len() < 4 {
        return Err(Error::InvalidArgument(format!("power-law fit needs at least 4 points, got {}", sel.len())));
    }
    if sel.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0)) {
        return Err(Error::InvalidArgument("power-law fit needs positive values".into()));
    }
    let logs: Vec<(f64, f64)> = sel.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Seeded multinomial sample of `shots` measurements; counts per basis string.
pub fn sample_shots(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<u64>> {
    let dist = WeightedIndex::new(state.probabilities()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; state.dim()];
    for _ in 0..shots {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Closed-form gate counts of the fermionic ansatz components on an `N x D`
/// ladder with budget `M`.
pub fn closed_form_counts(shape: LatticeShape, m: i64) -> ComponentCounts {
    let (n, d) = (shape.n as i64, shape.d as i64);
    let nd = n * d;
    ComponentCounts {
        init: GateCounts::new((nd + 2 * m + 2) * (nd - 2 * m) / 4, 3 * (nd * nd - 4 * m * m) / 4),
        phase: GateCounts::new(nd * (nd + 1) / 2, nd * (nd - 1)),
        mixer: GateCounts::new(2 * n * n * d + 10 * nd - 6 * n, 2 * n * n * d + 2 * nd - 2 * n),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n: usize,
    pub d: usize,
    pub m: i64,
    pub p: usize,
    pub counts: ComponentCounts,
    pub total: GateCounts,
}

fn check(component: &str, expected: GateCounts, got: GateCounts) -> Result<()> {
    if expected != got {
        return Err(Error::Certification {
            component: component.to_string(),
            exp_single: expected.single,
            exp_two: expected.two,
            got_single: got.single,
            got_two: got.two,
        });
    }
    Ok(())
}

/// Counts each circuit's gates by class and checks them, and the `p`-layer
/// total, against [`closed_form_counts`].
pub fn certify_gate_counts(
    circuits: &ComponentCircuits,
    shape: LatticeShape,
    m: i64,
    p: usize,
) -> Result<CertificationReport> {
    let expected = closed_form_counts(shape, m);
    let got = ComponentCounts { init: circuits.init.counts(), phase: circuits.phase.counts(), mixer: circuits.mixer.counts() };
    check("U_init", expected.init, got.init)?;
    check("U_p", expected.phase, got.phase)?;
    check("U_m", expected.mixer, got.mixer)?;
    let mut total = got.init;
    for _ in 0..p {
        total = total + got.phase + got.mixer;
    }
    check("total", expected.total(p), total)?;
    Ok(CertificationReport { n: shape.n, d: shape.d, m, p, counts: got, total })
}
