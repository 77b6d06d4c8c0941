//! Snake-type Jordan-Wigner ordering of the `N x D` ladder.
//!
//! Site labels `(l, d)` and linear indices `i` are 1-based; the simulator
//! qubit carrying site `i` is `i - 1`. Odd legs run `l = 1..N` in index
//! order, even legs run backwards, so consecutive indices are always lattice
//! neighbours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeShape {
    /// Stocks, i.e. sites per leg.
    pub n: usize,
    /// Legs, i.e. bits per stock.
    pub d: usize,
}

impl LatticeShape {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::InvalidShape(format!("need N >= 2 and D >= 1, got N={n}, D={d}")));
        }
        Ok(Self { n, d })
    }

    /// Shapes on which the Trotterized ladder mixer can be laid out.
    pub fn require_even(&self) -> Result<()> {
        if self.n % 2 != 0 || self.d % 2 != 0 {
            return Err(Error::InvalidShape(format!(
                "mixer layout needs even N and even D, got N={}, D={}",
                self.n, self.d
            )));
        }
        Ok(())
    }

    pub fn num_sites(&self) -> usize {
        self.n * self.d
    }

    /// `i(l, d)`.
    pub fn site_to_index(&self, l: usize, d: usize) -> Result<usize> {
        if !(1..=self.n).contains(&l) || !(1..=self.d).contains(&d) {
            return Err(Error::OutOfRange(format!("site ({l}, {d}) outside {}x{}", self.n, self.d)));
        }
        Ok(self.index_unchecked(l, d))
    }

    pub(crate) fn index_unchecked(&self, l: usize, d: usize) -> usize {
        let (n, l, d) = (self.n as i64, l as i64, d as i64);
        let sign = if (d - 1) % 2 == 0 { 1 } else { -1 };
        let i = sign * l + (d - 1) * n + (1 - sign) / 2 * (n + 1);
        i as usize
    }

    /// `(l, d)` for index `i`.
    pub fn index_to_site(&self, i: usize) -> Result<(usize, usize)> {
        if !(1..=self.num_sites()).contains(&i) {
            return Err(Error::OutOfRange(format!("index {i} outside 1..={}", self.num_sites())));
        }
        let (n, ii) = (self.n as i64, i as i64);
        let d = (ii + n - 1) / n;
        let sign = if d % 2 == 0 { 1 } else { -1 };
        let l = (n + 1 - sign * (n - 1)) / 2 + sign * (n * d - ii);
        Ok((l as usize, d as usize))
    }

    /// Qubit (0-based) holding site `(l, d)`.
    pub fn qubit(&self, l: usize, d: usize) -> Result<usize> {
        Ok(self.site_to_index(l, d)? - 1)
    }

    /// Stock `l` (1-based) owning each qubit.
    pub fn stock_of_qubit(&self) -> Vec<usize> {
        (1..=self.num_sites()).map(|i| self.index_to_site(i).expect("in range").0).collect()
    }
}

/// `s_z = 1/2 - x`.
pub fn spin_of_bit(x: u8) -> f64 {
    0.5 - f64::from(x)
}
