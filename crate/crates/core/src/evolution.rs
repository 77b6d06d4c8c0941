//! Layer unitaries: the diagonal phase rotation `U_p(gamma)` and the
//! Trotterized ladder mixer `U_m(beta)` built from hop and FSWAP gates, with an
//! exact free-fermion mixer for cross-checks.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::jw::LatticeShape;
use crate::ladder::LadderDriver;
use crate::problem::{DiagonalHamiltonian, PortfolioInstance};
use crate::sim::{Circuit, Gate, GateCounts, Matrix2, StateVector};
use crate::stateprep::{decompose_unitary, UnitaryDecomposition};
use crate::linalg::CMatrix;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub const HOP_COUNTS: GateCounts = GateCounts { single: 6, two: 2 };
pub const FSWAP_COUNTS: GateCounts = GateCounts { single: 2, two: 2 };
pub const ZZ_COUNTS: GateCounts = GateCounts { single: 1, two: 2 };

/// `amplitude(x) *= exp(-i gamma E(x))`.
pub fn apply_phase(state: &mut StateVector, gamma: f64, ham: &DiagonalHamiltonian) -> Result<()> {
    state.apply_diagonal_phase(&ham.energies, gamma)
}

/// `sum_{a<b} K_ab Z_a Z_b + sum_a k_a Z_a + c`.
#[derive(Clone, Debug)]
pub struct IsingForm {
    pub num_qubits: usize,
    /// Upper triangle, row-major: `couplings[a][b]` for `b > a`.
    pub couplings: Vec<Vec<f64>>,
    pub fields: Vec<f64>,
    pub constant: f64,
}

impl IsingForm {
    /// Ising form of the portfolio cost, optionally with `A (sum s_z - M)^2` added.
    pub fn from_instance(inst: &PortfolioInstance, penalty: Option<f64>) -> Self {
        let n = inst.num_qubits();
        let stock = inst.shape().stock_of_qubit();
        let m = inst.m as f64;
        let quad = inst.lambda / (m * m);
        let lin = (1.0 - inst.lambda) / m;
        // y_l = -sum_{a in l} Z_a / 2
        let mut couplings = vec![vec![0.0; n]; n];
        let mut fields = vec![0.0; n];
        let mut constant = 0.0;
        for a in 0..n {
            let la = stock[a] - 1;
            constant += quad * inst.sigma[la][la] / 4.0;
            fields[a] = -lin * inst.mu[la] / 2.0;
            for b in a + 1..n {
                couplings[a][b] = quad * inst.sigma[la][stock[b] - 1] / 2.0;
            }
        }
        if let Some(amp) = penalty {
            // sum s_z = sum_a Z_a / 2
            for a in 0..n {
                fields[a] -= amp * m;
                for b in a + 1..n {
                    couplings[a][b] += amp / 2.0;
                }
            }
            constant += amp * (n as f64 / 4.0 + m * m);
        }
        Self { num_qubits: n, couplings, fields, constant }
    }

    pub fn energy(&self, x: usize) -> f64 {
        let z = |a: usize| if x >> a & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.constant;
        for a in 0..self.num_qubits {
            e += self.fields[a] * z(a);
            for b in a + 1..self.num_qubits {
                e += self.couplings[a][b] * z(a) * z(b);
            }
        }
        e
    }
}

/// `exp(-i gamma H)` for an Ising form, up to the global phase of the constant:
/// one `CNOT, RZ, CNOT` per pair, one `RZ` per site.
pub fn synthesize_phase_circuit(gamma: f64, form: &IsingForm) -> Circuit {
    let n = form.num_qubits;
    let mut c = Circuit::new(n);
    for a in 0..n {
        for b in a + 1..n {
            c.push(Gate::Cnot { control: a, target: b });
            c.push(Gate::Rz(b, 2.0 * gamma * form.couplings[a][b]));
            c.push(Gate::Cnot { control: a, target: b });
        }
    }
    for a in 0..n {
        c.push(Gate::Rz(a, 2.0 * gamma * form.fields[a]));
    }
    c
}

pub fn phase_counts(num_qubits: usize) -> GateCounts {
    let n = num_qubits as i64;
    GateCounts::new(n * (n + 1) / 2, n * (n - 1))
}

fn require_adjacent(i: usize, j: usize) -> Result<()> {
    if j != i + 1 {
        return Err(Error::NonAdjacent(i, j));
    }
    Ok(())
}

/// `exp(i beta t (c^dagger_i c_j + h.c.))` on adjacent qubits `(i, j = i + 1)`.
pub fn hop_gates(i: usize, j: usize, beta_t: f64) -> Result<[Gate; 8]> {
    require_adjacent(i, j)?;
    Ok([
        Gate::Rx(i, -FRAC_PI_2),
        Gate::Rx(j, FRAC_PI_2),
        Gate::Cnot { control: i, target: j },
        Gate::Rx(i, -beta_t),
        Gate::Rz(j, beta_t),
        Gate::Cnot { control: i, target: j },
        Gate::Rx(i, FRAC_PI_2),
        Gate::Rx(j, -FRAC_PI_2),
    ])
}

/// Fermionic swap of adjacent qubits: SWAP followed by CZ written as `H, CNOT, H`.
pub fn fswap_gates(i: usize, j: usize) -> Result<[Gate; 4]> {
    require_adjacent(i, j)?;
    Ok([Gate::Swap(i, j), Gate::H(j), Gate::Cnot { control: i, target: j }, Gate::H(j)])
}

/// Single-excitation block of the hop gate.
pub fn hop_block(beta_t: f64) -> Matrix2 {
    let (s, c) = beta_t.sin_cos();
    [[C64::new(c, 0.0), C64::new(0.0, s)], [C64::new(0.0, s), C64::new(c, 0.0)]]
}

const SWAP_BLOCK: Matrix2 = [[ZERO, ONE], [ONE, ZERO]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixerOp {
    /// Hop on qubits `(site, site + 1)` with the given hopping integral.
    Hop { site: usize, t: f64 },
    Fswap { site: usize },
}

/// Placement of hop and FSWAP gates in one Trotter step of the ladder mixer.
/// Positions are the lower qubit of each adjacent pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MixerLayout {
    pub shape: LatticeShape,
    pub leg_hops_i: Vec<usize>,
    pub leg_hops_ii: Vec<usize>,
    pub fswaps_i: Vec<usize>,
    pub fswaps_ii: Vec<usize>,
    pub rung_hops: Vec<usize>,
    pub bc_hops: Vec<usize>,
    /// Applications of the swap block before and after the boundary layer.
    pub v_split: (usize, usize),
}

impl MixerLayout {
    pub fn new(shape: LatticeShape) -> Result<Self> {
        shape.require_even()?;
        let (n, d_max) = (shape.n, shape.d);
        let q = |l: usize, d: usize| shape.index_unchecked(l, d) - 1;
        // the pair (i_{l,d}, i_{l,d} + 1) stays on leg d
        let on_leg = |l: usize, d: usize| if d % 2 == 1 { l < n } else { l > 1 };
        let layer = |parity_match: bool| -> Vec<usize> {
            let mut out = Vec::new();
            for d in 1..=d_max {
                for l in 1..=n {
                    if ((l % 2 == d % 2) == parity_match) && on_leg(l, d) {
                        out.push(q(l, d));
                    }
                }
            }
            out.sort_unstable();
            out
        };
        let first = layer(true);
        let second = layer(false);
        let rung_hops: Vec<usize> =
            (1..d_max).map(|d| if d % 2 == 1 { q(n, d) } else { q(1, d) }).collect();
        let p = (n + 1) / 2;
        let bc_hops: Vec<usize> = (1..=d_max).map(|d| if d % 2 == 1 { q(p, d) } else { q(p + 1, d) }).collect();
        Ok(Self {
            shape,
            leg_hops_i: first.clone(),
            leg_hops_ii: second.clone(),
            fswaps_i: first,
            fswaps_ii: second,
            rung_hops,
            bc_hops,
            v_split: ((n + 1) / 4, (3 * n - 1).div_ceil(4)),
        })
    }

    fn push_v(&self, ops: &mut Vec<MixerOp>, t_perp: f64) {
        ops.extend(self.fswaps_i.iter().map(|&site| MixerOp::Fswap { site }));
        ops.extend(self.fswaps_ii.iter().map(|&site| MixerOp::Fswap { site }));
        ops.extend(self.rung_hops.iter().map(|&site| MixerOp::Hop { site, t: t_perp }));
    }

    /// `U_I, U_II, V^pre, U_BC, V^post` in application order.
    pub fn sequence(&self, t_par: f64, t_perp: f64) -> Vec<MixerOp> {
        let mut ops = Vec::new();
        ops.extend(self.leg_hops_i.iter().map(|&site| MixerOp::Hop { site, t: t_par }));
        ops.extend(self.leg_hops_ii.iter().map(|&site| MixerOp::Hop { site, t: t_par }));
        for _ in 0..self.v_split.0 {
            self.push_v(&mut ops, t_perp);
        }
        ops.extend(self.bc_hops.iter().map(|&site| MixerOp::Hop { site, t: t_par }));
        for _ in 0..self.v_split.1 {
            self.push_v(&mut ops, t_perp);
        }
        ops
    }

    pub fn hop_count(&self) -> usize {
        let v = self.v_split.0 + self.v_split.1;
        self.leg_hops_i.len() + self.leg_hops_ii.len() + self.bc_hops.len() + v * self.rung_hops.len()
    }

    pub fn fswap_count(&self) -> usize {
        (self.v_split.0 + self.v_split.1) * (self.fswaps_i.len() + self.fswaps_ii.len())
    }
}

/// `(2N^2 D + 10ND - 6N, 2N^2 D + 2ND - 2N)`.
pub fn mixer_counts(shape: LatticeShape) -> GateCounts {
    let (n, d) = (shape.n as i64, shape.d as i64);
    GateCounts::new(2 * n * n * d + 10 * n * d - 6 * n, 2 * n * n * d + 2 * n * d - 2 * n)
}

pub fn synthesize_mixer_circuit(beta: f64, layout: &MixerLayout, t_par: f64, t_perp: f64) -> Result<Circuit> {
    let mut c = Circuit::new(layout.shape.num_sites());
    for op in layout.sequence(t_par, t_perp) {
        match op {
            MixerOp::Hop { site, t } => {
                for g in hop_gates(site, site + 1, beta * t)?.into_iter() {
                    c.push(g);
                }
            }
            MixerOp::Fswap { site } => fswap_gates(site, site + 1)?.into_iter().for_each(|g| c.push(g)),
        }
    }
    Ok(c)
}

/// Trotterized mixer applied gate-by-gate with fused two-qubit blocks.
pub fn apply_mixer(state: &mut StateVector, beta: f64, ops: &[MixerOp]) -> Result<()> {
    for op in ops {
        match *op {
            MixerOp::Hop { site, t } => state.apply_conserving(site, site + 1, ONE, &hop_block(beta * t), ONE)?,
            MixerOp::Fswap { site } => state.apply_conserving(site, site + 1, ONE, &SWAP_BLOCK, -ONE)?,
        }
    }
    Ok(())
}

/// `exp(-i beta H_t)` through the driver's orbital basis.
#[derive(Clone, Debug)]
pub struct ExactMixer {
    basis: UnitaryDecomposition,
    energies: Vec<f64>,
}

impl ExactMixer {
    pub fn new(driver: &LadderDriver) -> Result<Self> {
        Ok(Self { basis: decompose_unitary(driver.orbital_matrix())?, energies: driver.energies().to_vec() })
    }

    /// `c^dagger_j -> sum_c u[j][c] c^dagger_c` with `u = phi^dagger diag(exp(-i beta eps)) phi`,
    /// applied as the transform of `phi^dagger`, the orbital phases, then `phi`.
    pub fn apply(&self, state: &mut StateVector, beta: f64) -> Result<()> {
        self.basis.apply_inverse(state)?;
        let phases: Vec<C64> = self.energies.iter().map(|&e| C64::from_polar(1.0, -beta * e)).collect();
        for (x, a) in state.amplitudes_mut().iter_mut().enumerate() {
            let mut p = ONE;
            let mut bits = x;
            while bits != 0 {
                p *= phases[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            *a *= p;
        }
        self.basis.apply(state)
    }

    /// Single-particle `u` of [`Self::apply`].
    pub fn single_particle(driver: &LadderDriver, beta: f64) -> CMatrix {
        let phi = driver.orbital_matrix();
        let e = driver.energies();
        let n = phi.rows();
        CMatrix::from_fn(n, n, |j, c| (0..n).map(|r| phi[(r, j)].conj() * C64::from_polar(1.0, -beta * e[r]) * phi[(r, c)]).sum())
    }
}
