//! Tight-binding driver on the periodic `D`-leg ladder.
//!
//! Eigenmodes are labelled `(k, m)` with `k = 1..N` (momentum along the legs)
//! and `m = 1..D` (standing wave across them). The orbital matrix has one row
//! per mode, in [`LadderDriver::labels`] order, and one column per qubit.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::jw::LatticeShape;
use crate::linalg::CMatrix;
use crate::operators::QuadraticFermionOperator;

/// Energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LadderDriver {
    pub t_par: f64,
    pub t_perp: f64,
    pub shape: LatticeShape,
    labels: Vec<(usize, usize)>,
    energies: Vec<f64>,
    orbitals: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalSelection {
    pub occupied: Vec<(usize, usize)>,
    /// Rows of the orbital matrix for `occupied`.
    pub rows: Vec<usize>,
    pub e0: f64,
    pub closed_shell: bool,
}

pub fn mode_energy(shape: LatticeShape, t_par: f64, t_perp: f64, k: usize, m: usize) -> f64 {
    -2.0 * t_par * (2.0 * PI * k as f64 / shape.n as f64).cos()
        - 2.0 * t_perp * (PI * m as f64 / (shape.d + 1) as f64).cos()
}

impl LadderDriver {
    pub fn new(shape: LatticeShape, t_par: f64, t_perp: f64) -> Result<Self> {
        let shape = LatticeShape::new(shape.n, shape.d)?;
        let (n, d) = (shape.n, shape.d);
        let labels: Vec<(usize, usize)> = (1..=d).flat_map(|m| (1..=n).map(move |k| (k, m))).collect();
        let energies = labels.iter().map(|&(k, m)| mode_energy(shape, t_par, t_perp, k, m)).collect();
        let norm = (2.0 / ((d + 1) * n) as f64).sqrt();
        let mut orbitals = CMatrix::zeros(n * d, n * d);
        for (row, &(k, m)) in labels.iter().enumerate() {
            for l in 1..=n {
                for dd in 1..=d {
                    let col = shape.index_unchecked(l, dd) - 1;
                    let phase = C64::from_polar(1.0, 2.0 * PI * (l * k) as f64 / n as f64);
                    let standing = (PI * (dd * m) as f64 / (d + 1) as f64).sin();
                    orbitals[(row, col)] = phase * (norm * standing);
                }
            }
        }
        Ok(Self { t_par, t_perp, shape, labels, energies, orbitals })
    }

    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Single-particle energies, aligned with [`Self::labels`].
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, k: usize, m: usize) -> f64 {
        mode_energy(self.shape, self.t_par, self.t_perp, k, m)
    }

    pub fn orbital_matrix(&self) -> &CMatrix {
        &self.orbitals
    }

    /// Hopping bonds `(qubit_a, qubit_b, t)`: periodic legs, open rungs.
    pub fn bonds(&self) -> Vec<(usize, usize, f64)> {
        let s = self.shape;
        let mut out = Vec::new();
        for d in 1..=s.d {
            for l in 1..=s.n {
                let next = l % s.n + 1;
                out.push((s.index_unchecked(l, d) - 1, s.index_unchecked(next, d) - 1, self.t_par));
            }
        }
        for d in 1..s.d {
            for l in 1..=s.n {
                out.push((s.index_unchecked(l, d) - 1, s.index_unchecked(l, d + 1) - 1, self.t_perp));
            }
        }
        out
    }

    /// Many-body `H_t = -sum_bonds t (c^dagger_a c_b + h.c.)`.
    pub fn many_body(&self) -> QuadraticFermionOperator {
        let mut op = QuadraticFermionOperator::new(self.shape.num_sites());
        for (a, b, t) in self.bonds() {
            op.add_hopping(a, b, -t);
        }
        op
    }

    /// Lowest-energy `m_prime` modes; ties broken by `(energy, m, k)`.
    pub fn select_occupied(&self, m_prime: usize) -> Result<OrbitalSelection> {
        let total = self.labels.len();
        if m_prime > total {
            return Err(Error::OutOfRange(format!("M' = {m_prime} exceeds {total} modes")));
        }
        let order = self.sorted_modes();
        let rows: Vec<usize> = order[..m_prime].to_vec();
        let closed_shell = m_prime == 0
            || m_prime == total
            || (self.energies[order[m_prime]] - self.energies[order[m_prime - 1]]).abs() > DEGENERACY_TOL;
        if !closed_shell {
            warn!(
                "open shell: level {:.6} at the Fermi surface of {}x{} ladder with M'={} is degenerate; \
                 filling by (energy, m, k) order",
                self.energies[order[m_prime - 1]],
                self.shape.n,
                self.shape.d,
                m_prime
            );
        }
        Ok(OrbitalSelection {
            occupied: rows.iter().map(|&r| self.labels[r]).collect(),
            e0: rows.iter().map(|&r| self.energies[r]).sum(),
            rows,
            closed_shell,
        })
    }

    fn sorted_modes(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.labels.len()).collect();
        let key = |r: usize| ((self.energies[r] / DEGENERACY_TOL).round() as i64, self.labels[r].1, self.labels[r].0);
        order.sort_by_key(|&r| key(r));
        order
    }

    /// Occupied rows of the orbital matrix.
    pub fn occupied_orbitals(&self, selection: &OrbitalSelection) -> CMatrix {
        self.orbitals.select_rows(&selection.rows)
    }

    /// Range of the many-body energy within the `m_prime` sector.
    pub fn sector_range(&self, m_prime: usize) -> f64 {
        let mut e = self.energies.clone();
        e.sort_by(f64::total_cmp);
        let low: f64 = e[..m_prime].iter().sum();
        let high: f64 = e[e.len() - m_prime..].iter().sum();
        high - low
    }
}

/// `t_par = t_perp = w / W_t`, with `W_t` the sector range at unit hopping.
pub fn hopping_scale(w: f64, shape: LatticeShape, m_prime: usize) -> Result<(f64, f64)> {
    if !(w > 0.0) {
        return Err(Error::InvalidArgument(format!("energy range must be positive, got {w}")));
    }
    if m_prime > shape.num_sites() {
        return Err(Error::OutOfRange(format!("M' = {m_prime} exceeds {} sites", shape.num_sites())));
    }
    let w_t = LadderDriver::new(shape, 1.0, 1.0)?.sector_range(m_prime);
    if w_t.abs() < DEGENERACY_TOL {
        return Err(Error::FlatBand);
    }
    let t = w / w_t;
    Ok((t, t))
}
