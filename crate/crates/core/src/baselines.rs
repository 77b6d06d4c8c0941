//! Comparison ansätze on two-leg ladders: the transverse-field mixer with a
//! quadratic budget penalty, and ring-exchange mixers started from
//! budget-satisfying product or symmetrized states.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolution::hop_block;
use crate::jw::LatticeShape;
use crate::problem::DiagonalHamiltonian;
use crate::sim::{rx, GateCounts, StateVector};

pub const DEFAULT_PENALTY: f64 = 0.003;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug)]
pub struct PenaltyProblem {
    pub amplitude: f64,
    pub budget: i64,
    pub penalized: Vec<f64>,
}

impl PenaltyProblem {
    /// `E(x) + A (sum s_z(x) - M)^2` with `sum s_z = n/2 - weight(x)`.
    pub fn new(base: &DiagonalHamiltonian, budget: i64, amplitude: f64) -> Self {
        let n = base.num_qubits() as f64;
        let penalized = base
            .energies
            .iter()
            .enumerate()
            .map(|(x, &e)| {
                let sz = n / 2.0 - x.count_ones() as f64;
                e + amplitude * (sz - budget as f64).powi(2)
            })
            .collect();
        Self { amplitude, budget, penalized }
    }
}

/// `|+>^n`.
pub fn plus_state(num_qubits: usize) -> Result<StateVector> {
    let dim = 1usize << num_qubits;
    let a = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    StateVector::from_amplitudes(vec![a; dim])
}

/// Penalized phase, then `exp(i beta sum_a X_a)` as `RX(-2 beta)` on every qubit.
pub fn x_qaoa_step(state: &mut StateVector, gamma: f64, beta: f64, pen: &PenaltyProblem) -> Result<()> {
    state.apply_diagonal_phase(&pen.penalized, gamma)?;
    let u = rx(-2.0 * beta);
    for q in 0..state.num_qubits() {
        state.apply_one(q, &u);
    }
    Ok(())
}

fn require_two_legs(shape: LatticeShape) -> Result<()> {
    if shape.d != 2 {
        return Err(Error::InvalidShape(format!("exchange baselines need D = 2, got D = {}", shape.d)));
    }
    Ok(())
}

fn stock_qubits(shape: LatticeShape, l: usize) -> (usize, usize) {
    (shape.index_unchecked(l, 1) - 1, shape.index_unchecked(l, 2) - 1)
}

/// Stocks `1..=M` held long (both bits 0); every other stock in the triplet
/// `(|01> + |10>)/sqrt 2` on its two bits.
pub fn build_phi_i(shape: LatticeShape, budget: usize) -> Result<StateVector> {
    require_two_legs(shape)?;
    if budget > shape.n {
        return Err(Error::OutOfRange(format!("M = {budget} exceeds N = {}", shape.n)));
    }
    let n = shape.num_sites();
    let mut amps = vec![ZERO; 1 << n];
    let free: Vec<usize> = (budget + 1..=shape.n).collect();
    let a = C64::new((0.5f64).powf(free.len() as f64 / 2.0), 0.0);
    for choice in 0..1usize << free.len() {
        let mut x = 0usize;
        for (k, &l) in free.iter().enumerate() {
            let (q1, q2) = stock_qubits(shape, l);
            x |= 1 << if choice >> k & 1 == 0 { q1 } else { q2 };
        }
        amps[x] = a;
    }
    StateVector::from_amplitudes(amps)
}

/// Uniform superposition of every string with exactly `M` stocks at `00` and
/// the rest at `01` or `10`.
pub fn build_phi_ii(shape: LatticeShape, budget: usize) -> Result<StateVector> {
    require_two_legs(shape)?;
    if budget > shape.n {
        return Err(Error::OutOfRange(format!("M = {budget} exceeds N = {}", shape.n)));
    }
    let n = shape.num_sites();
    let pairs: Vec<(usize, usize)> = (1..=shape.n).map(|l| stock_qubits(shape, l)).collect();
    let mut amps = vec![ZERO; 1 << n];
    let mut count = 0usize;
    'strings: for x in 0..1usize << n {
        let mut long = 0;
        for &(q1, q2) in &pairs {
            match (x >> q1 & 1, x >> q2 & 1) {
                (0, 0) => long += 1,
                (1, 1) => continue 'strings,
                _ => {}
            }
        }
        if long == budget {
            amps[x] = ONE;
            count += 1;
        }
    }
    let a = 1.0 / (count as f64).sqrt();
    amps.iter_mut().for_each(|v| *v *= a);
    StateVector::from_amplitudes(amps)
}

/// Ring pairs along each leg: odd-`l` bonds, even-`l` bonds, then `(N, 1)`.
pub fn xy_layers(shape: LatticeShape) -> Result<[Vec<(usize, usize)>; 3]> {
    if shape.n % 2 != 0 {
        return Err(Error::InvalidShape(format!("ring exchange layers need even N, got N = {}", shape.n)));
    }
    let q = |l: usize, d: usize| shape.index_unchecked(l, d) - 1;
    let mut layers: [Vec<(usize, usize)>; 3] = Default::default();
    for d in 1..=shape.d {
        for l in 1..shape.n {
            layers[(l + 1) % 2].push((q(l, d), q(l + 1, d)));
        }
        layers[2].push((q(shape.n, d), q(1, d)));
    }
    Ok(layers)
}

/// `exp(-i beta H_XY)` with `H_XY = -(1/2) sum (XX + YY)` over ring bonds, one
/// Trotter step.
pub fn xy_mixer_step(state: &mut StateVector, beta: f64, layers: &[Vec<(usize, usize)>; 3]) -> Result<()> {
    let block = hop_block(beta);
    for layer in layers {
        for &(a, b) in layer {
            state.apply_conserving(a, b, ONE, &block, ONE)?;
        }
    }
    Ok(())
}

/// Ring bonds of all legs as a flat list.
pub fn xy_pairs(shape: LatticeShape) -> Result<Vec<(usize, usize)>> {
    Ok(xy_layers(shape)?.into_iter().flatten().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DickeCounts {
    /// Dicke-state circuit of weight `N - M` on `N` qubits.
    pub dicke: GateCounts,
    /// Symmetrized initial state: Dicke part plus one exchange per stock.
    pub phi_ii: GateCounts,
}

pub fn dicke_gate_counts(n: usize, m: usize) -> Result<DickeCounts> {
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("Dicke counts need 0 < M <= N, got N = {n}, M = {m}")));
    }
    let (n, m) = (n as i64, m as i64);
    Ok(DickeCounts {
        dicke: GateCounts::new(4 * n * m - 4 * m * m - 2 * n + 1, 5 * n * m - 5 * m * m - 2 * n),
        phi_ii: GateCounts::new(4 * n * m - 4 * m * m + 4 * n + 1, 5 * m * (n - m)),
    })
}

/// Triplet preparation on the `N - M` free stocks.
pub fn phi_i_counts(n: usize, m: usize) -> GateCounts {
    let free = n as i64 - m as i64;
    GateCounts::new(2 * free, free)
}

/// One exchange gate per ring bond on two legs.
pub fn xy_mixer_counts(n: usize) -> GateCounts {
    GateCounts::new(12 * n as i64, 4 * n as i64)
}

/// One Hadamard or `RX` per qubit.
pub fn x_layer_counts(num_qubits: usize) -> GateCounts {
    GateCounts::new(num_qubits as i64, 0)
}
