//! Many-body operator backend: quadratic fermionic operators with
//! Jordan-Wigner signs and spin exchange operators, applied to statevectors.
//! Used to audit driver eigenstates and to cross-check circuit synthesis.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sim::StateVector;

pub trait Observable {
    fn num_qubits(&self) -> usize;

    /// `O |psi>`.
    fn apply(&self, state: &StateVector) -> Result<StateVector>;

    fn expectation(&self, state: &StateVector) -> Result<f64> {
        Ok(state.inner(&self.apply(state)?)?.re)
    }

    /// `<O^2> - <O>^2` for Hermitian `O`.
    fn variance(&self, state: &StateVector) -> Result<f64> {
        let o = self.apply(state)?;
        let mean = state.inner(&o)?.re;
        Ok(o.norm_sqr() - mean * mean)
    }
}

/// `sum coefficient * c^dagger_a c_b` over qubit indices (0-based).
#[derive(Clone, Debug, Default)]
pub struct QuadraticFermionOperator {
    num_qubits: usize,
    terms: Vec<(usize, usize, C64)>,
}

impl QuadraticFermionOperator {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, terms: Vec::new() }
    }

    pub fn add(&mut self, a: usize, b: usize, coefficient: C64) {
        self.terms.push((a, b, coefficient));
    }

    /// `coefficient * (c^dagger_a c_b + c^dagger_b c_a)`.
    pub fn add_hopping(&mut self, a: usize, b: usize, coefficient: f64) {
        self.add(a, b, C64::new(coefficient, 0.0));
        self.add(b, a, C64::new(coefficient, 0.0));
    }

    pub fn terms(&self) -> &[(usize, usize, C64)] {
        &self.terms
    }

    /// Coefficient matrix `h[a][b]`.
    pub fn single_particle(&self) -> Vec<Vec<C64>> {
        let mut h = vec![vec![C64::new(0.0, 0.0); self.num_qubits]; self.num_qubits];
        for &(a, b, c) in &self.terms {
            h[a][b] += c;
        }
        h
    }
}

/// Occupied modes above `a` in the ordering `c^dagger_n ... c^dagger_1 |vac>`.
fn parity_above(x: usize, a: usize) -> bool {
    (x >> (a + 1)).count_ones() % 2 == 1
}

impl Observable for QuadraticFermionOperator {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::LengthMismatch { expected: self.num_qubits, actual: state.num_qubits() });
        }
        let amps = state.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for &(a, b, coeff) in &self.terms {
            let (ba, bb) = (1usize << a, 1usize << b);
            for (x, &amp) in amps.iter().enumerate() {
                if amp == C64::new(0.0, 0.0) || x & bb == 0 {
                    continue;
                }
                if a == b {
                    out[x] += coeff * amp;
                    continue;
                }
                let removed = x ^ bb;
                if removed & ba != 0 {
                    continue;
                }
                let negative = parity_above(x, b) ^ parity_above(removed, a);
                let sign = if negative { -1.0 } else { 1.0 };
                out[removed | ba] += coeff * amp * sign;
            }
        }
        StateVector::from_amplitudes(out)
    }
}

/// `coefficient * sum_pairs (sigma+_a sigma-_b + sigma-_a sigma+_b)`, i.e.
/// `coefficient/2 * (XX + YY)` per pair, with no Jordan-Wigner string.
#[derive(Clone, Debug)]
pub struct SpinExchangeOperator {
    num_qubits: usize,
    pairs: Vec<(usize, usize)>,
    coefficient: f64,
}

impl SpinExchangeOperator {
    pub fn new(num_qubits: usize, pairs: Vec<(usize, usize)>, coefficient: f64) -> Self {
        Self { num_qubits, pairs, coefficient }
    }
}

impl Observable for SpinExchangeOperator {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::LengthMismatch { expected: self.num_qubits, actual: state.num_qubits() });
        }
        let amps = state.amplitudes();
        let mut out = vec![C64::new(0.0, 0.0); amps.len()];
        for &(a, b) in &self.pairs {
            let mask = (1usize << a) | (1usize << b);
            for (x, &amp) in amps.iter().enumerate() {
                let bits = x & mask;
                if bits != 0 && bits != mask {
                    out[x ^ mask] += amp * self.coefficient;
                }
            }
        }
        StateVector::from_amplitudes(out)
    }
}

/// Diagonal operator given by its eigenvalue per basis state.
pub struct DiagonalOperator<'a>(pub &'a [f64]);

impl Observable for DiagonalOperator<'_> {
    fn num_qubits(&self) -> usize {
        self.0.len().trailing_zeros() as usize
    }

    fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.0.len() {
            return Err(Error::LengthMismatch { expected: self.0.len(), actual: state.dim() });
        }
        StateVector::from_amplitudes(state.amplitudes().iter().zip(self.0).map(|(a, e)| a * e).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacent_hop_has_no_sign() {
        // c^dagger_1 c_0 |01> = |10>
        let mut op = QuadraticFermionOperator::new(2);
        op.add(1, 0, C64::new(1.0, 0.0));
        let s = StateVector::basis(2, 0b01).unwrap();
        let out = op.apply(&s).unwrap();
        assert_eq!(out.amplitudes()[0b10], C64::new(1.0, 0.0));
    }

    #[test]
    fn long_hop_picks_up_string_sign() {
        // c^dagger_2 c_0 across an occupied site 1 flips sign.
        let mut op = QuadraticFermionOperator::new(3);
        op.add(2, 0, C64::new(1.0, 0.0));
        let out = op.apply(&StateVector::basis(3, 0b011).unwrap()).unwrap();
        assert_eq!(out.amplitudes()[0b110], C64::new(-1.0, 0.0));
        let out = op.apply(&StateVector::basis(3, 0b001).unwrap()).unwrap();
        assert_eq!(out.amplitudes()[0b100], C64::new(1.0, 0.0));
    }

    #[test]
    fn number_operator_counts_particles() {
        let mut op = QuadraticFermionOperator::new(4);
        (0..4).for_each(|q| op.add(q, q, C64::new(1.0, 0.0)));
        let s = StateVector::basis(4, 0b1011).unwrap();
        assert!((op.expectation(&s).unwrap() - 3.0).abs() < 1e-15);
        assert!(op.variance(&s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn exchange_swaps_single_excitation() {
        let op = SpinExchangeOperator::new(2, vec![(0, 1)], 1.0);
        let out = op.apply(&StateVector::basis(2, 0b01).unwrap()).unwrap();
        assert_eq!(out.amplitudes()[0b10], C64::new(1.0, 0.0));
        let out = op.apply(&StateVector::basis(2, 0b11).unwrap()).unwrap();
        assert_eq!(out.norm(), 0.0);
    }
}
