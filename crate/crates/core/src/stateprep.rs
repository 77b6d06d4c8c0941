//! Givens-rotation synthesis of Slater determinants and of general
//! single-particle unitaries.
//!
//! A two-mode rotation acts on adjacent modes `(c-1, c)` as
//! `G = [[cos t, -e^{i p} sin t], [sin t, e^{i p} cos t]]`; on the many-body
//! level it maps `c^dagger_{c-1+a} -> sum_b G[a][b] c^dagger_{c-1+b}`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::sim::{Circuit, Gate, GateCounts, Matrix2, Matrix4, StateVector};

/// Residual magnitude accepted in an eliminated entry.
pub const ELIMINATION_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GivensRotation {
    /// Left mode (0-based); the rotation acts on `(mode, mode + 1)`.
    pub mode: usize,
    pub theta: f64,
    pub phi: f64,
}

impl GivensRotation {
    pub fn matrix(&self) -> Matrix2 {
        let (s, c) = self.theta.sin_cos();
        let e = C64::from_polar(1.0, self.phi);
        [[C64::new(c, 0.0), -e * s], [C64::new(s, 0.0), e * c]]
    }

    /// Angles that zero `b` in the row `[a b]` under right-multiplication by `G^dagger`.
    pub fn zeroing(mode: usize, a: C64, b: C64) -> Self {
        if b.norm() == 0.0 {
            return Self { mode, theta: 0.0, phi: 0.0 };
        }
        if a.norm() == 0.0 {
            return Self { mode, theta: PI / 2.0, phi: 0.0 };
        }
        let theta = (b.norm() / a.norm()).atan();
        Self { mode, theta, phi: wrap_angle(b.arg() - a.arg() + PI) }
    }
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn adjoint2(g: &Matrix2) -> Matrix2 {
    [[g[0][0].conj(), g[1][0].conj()], [g[0][1].conj(), g[1][1].conj()]]
}

/// Many-body action of the mode transform `g` on two adjacent modes.
/// Local index is `bit(mode) + 2 * bit(mode + 1)`.
pub fn fermionic_two_mode(g: &Matrix2) -> Matrix4 {
    let mut t = [[ZERO; 4]; 4];
    t[0][0] = ONE;
    t[1][1] = g[0][0];
    t[2][1] = g[0][1];
    t[1][2] = g[1][0];
    t[2][2] = g[1][1];
    t[3][3] = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    t
}

/// Primitive gates for one rotation: CNOT, CRY, CNOT, RZ.
pub fn givens_gates(rot: &GivensRotation) -> [Gate; 4] {
    let (i, j) = (rot.mode, rot.mode + 1);
    [
        Gate::Cnot { control: j, target: i },
        Gate::CRy { control: i, target: j, theta: -2.0 * rot.theta },
        Gate::Cnot { control: j, target: i },
        Gate::Rz(j, rot.phi),
    ]
}

pub const GIVENS_COUNTS: GateCounts = GateCounts { single: 1, two: 3 };

/// Output of the Slater-determinant decomposition.
#[derive(Clone, Debug)]
pub struct SlaterDecomposition {
    pub num_modes: usize,
    pub num_particles: usize,
    /// In elimination order `G_1 .. G_K`.
    pub rotations: Vec<GivensRotation>,
    /// Elimination layer of each rotation (1-based).
    pub layers: Vec<usize>,
}

/// Row-mixes `q` so that row `j` (1-based) vanishes beyond column `n - m + j`.
pub fn zero_upper_triangle(q: &mut CMatrix) {
    let (m, n) = (q.rows(), q.cols());
    if m == 0 {
        return;
    }
    for c in (n - m + 1..n).rev() {
        // rows 0 .. c - (n - m) - 1 must vanish in column c (0-based)
        let limit = c + m - n;
        for r in 0..limit {
            let (a, b) = (q[(r, c)], q[(r + 1, c)]);
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if norm == 0.0 || a.norm() == 0.0 {
                continue;
            }
            let g = [[b / norm, -a / norm], [a.conj() / norm, b.conj() / norm]];
            q.rotate_rows(r, r + 1, g);
        }
    }
}

/// Order of the `M (n - M)` column eliminations: `(layer, row, col)`, 1-based.
pub fn elimination_order(n: usize, m: usize) -> Vec<(usize, usize, usize)> {
    let mut order = Vec::with_capacity(m * (n - m));
    for r in 1..=m {
        for c in r + 1..=n - m + r {
            order.push(((n - m + r - c) + (r - 1) + 1, r, c));
        }
    }
    order.sort();
    order
}

/// Decomposes an `M x n` matrix with orthonormal rows into `M (n - M)` rotations.
pub fn givens_decompose(orbitals: &CMatrix) -> Result<SlaterDecomposition> {
    let (m, n) = (orbitals.rows(), orbitals.cols());
    if m > n {
        return Err(Error::InvalidArgument(format!("{m} orbitals over {n} modes")));
    }
    let dev = orbitals.row_orthonormality_error();
    if dev > 1e-9 {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut q = orbitals.clone();
    zero_upper_triangle(&mut q);
    let mut rotations = Vec::new();
    let mut layers = Vec::new();
    for (layer, r, c) in elimination_order(n, m) {
        let (r0, c0) = (r - 1, c - 1);
        let rot = GivensRotation::zeroing(c0 - 1, q[(r0, c0 - 1)], q[(r0, c0)]);
        q.rotate_cols(c0 - 1, c0, adjoint2(&rot.matrix()));
        rotations.push(rot);
        layers.push(layer);
    }
    for r in 0..m {
        for c in 0..n {
            if c != r && q[(r, c)].norm() > ELIMINATION_TOL {
                return Err(Error::PatternViolation { row: r + 1, col: c + 1, magnitude: q[(r, c)].norm() });
            }
        }
    }
    Ok(SlaterDecomposition { num_modes: n, num_particles: m, rotations, layers })
}

/// `(N_G, 4 N_G + M)` single and `3 N_G` two-qubit gates.
pub fn init_counts(n: usize, m: usize) -> GateCounts {
    let ng = (m * (n - m)) as i64;
    GateCounts::new(m as i64 + ng, 3 * ng)
}

/// X on the first `M` qubits, then the rotations from `G_K` down to `G_1`.
pub fn synthesize_init_circuit(dec: &SlaterDecomposition) -> Circuit {
    let mut circuit = Circuit::new(dec.num_modes);
    for q in 0..dec.num_particles {
        circuit.push(Gate::X(q));
    }
    for rot in dec.rotations.iter().rev() {
        for g in givens_gates(rot) {
            circuit.push(g);
        }
    }
    circuit
}

/// Same state as [`synthesize_init_circuit`] with one dense gate per rotation.
pub fn prepare_slater_state(dec: &SlaterDecomposition) -> Result<StateVector> {
    let mut index = 0usize;
    for q in 0..dec.num_particles {
        index |= 1 << q;
    }
    let mut state = StateVector::basis(dec.num_modes, index)?;
    for rot in dec.rotations.iter().rev() {
        state.apply_two(rot.mode, rot.mode + 1, &fermionic_two_mode(&rot.matrix()))?;
    }
    Ok(state)
}

/// Slater amplitudes `det Q[:, S]` for every weight-`M` basis state `S`.
pub fn slater_amplitudes(orbitals: &CMatrix) -> Result<StateVector> {
    let (m, n) = (orbitals.rows(), orbitals.cols());
    if n > crate::sim::MAX_QUBITS {
        return Err(Error::TooManyQubits(n));
    }
    let mut amps = vec![ZERO; 1 << n];
    for (x, amp) in amps.iter_mut().enumerate() {
        if x.count_ones() as usize != m {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|&c| x >> c & 1 == 1).collect();
        *amp = orbitals.select_cols(&cols).determinant();
    }
    StateVector::from_amplitudes(amps)
}

/// `u = diag(phases) G_K .. G_1` for a full `n x n` unitary.
#[derive(Clone, Debug)]
pub struct UnitaryDecomposition {
    pub rotations: Vec<GivensRotation>,
    pub phases: Vec<C64>,
}

pub fn decompose_unitary(u: &CMatrix) -> Result<UnitaryDecomposition> {
    let n = u.rows();
    if u.cols() != n {
        return Err(Error::InvalidArgument("unitary must be square".into()));
    }
    let dev = u.row_orthonormality_error();
    if dev > 1e-9 {
        return Err(Error::NotOrthonormal(dev));
    }
    let mut q = u.clone();
    let mut rotations = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for r in 0..n {
        for c in (r + 1..n).rev() {
            let rot = GivensRotation::zeroing(c - 1, q[(r, c - 1)], q[(r, c)]);
            q.rotate_cols(c - 1, c, adjoint2(&rot.matrix()));
            rotations.push(rot);
        }
    }
    for r in 0..n {
        for c in 0..n {
            if c != r && q[(r, c)].norm() > ELIMINATION_TOL {
                return Err(Error::PatternViolation { row: r + 1, col: c + 1, magnitude: q[(r, c)].norm() });
            }
        }
    }
    Ok(UnitaryDecomposition { rotations, phases: (0..n).map(|i| q[(i, i)]).collect() })
}

impl UnitaryDecomposition {
    /// Applies the many-body transform `c^dagger_j -> sum_c u[j][c] c^dagger_c`.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        for (x, a) in state.amplitudes_mut().iter_mut().enumerate() {
            let mut p = ONE;
            let mut bits = x;
            while bits != 0 {
                p *= self.phases[bits.trailing_zeros() as usize];
                bits &= bits - 1;
            }
            *a *= p;
        }
        for rot in self.rotations.iter().rev() {
            state.apply_two(rot.mode, rot.mode + 1, &fermionic_two_mode(&rot.matrix()))?;
        }
        Ok(())
    }

    /// Inverse of [`Self::apply`], i.e. the transform of `u^dagger`.
    pub fn apply_inverse(&self, state: &mut StateVector) -> Result<()> {
        for rot in &self.rotations {
            state.apply_two(rot.mode, rot.mode + 1, &fermionic_two_mode(&adjoint2(&rot.matrix())))?;
        }
        for (x, a) in state.amplitudes_mut().iter_mut().enumerate() {
            let mut p = ONE;
            let mut bits = x;
            while bits != 0 {
                p *= self.phases[bits.trailing_zeros() as usize].conj();
                bits &= bits - 1;
            }
            *a *= p;
        }
        Ok(())
    }
}
