//! Dense statevector engine.
//!
//! Basis index `x` is little-endian: bit `q` of `x` is the occupation of qubit
//! `q`, and qubit `q` carries Jordan-Wigner site `q + 1` (see [`crate::jw`]).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Largest register the engine will allocate.
pub const MAX_QUBITS: usize = 24;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

pub type Matrix2 = [[C64; 2]; 2];
pub type Matrix4 = [[C64; 4]; 4];

/// Gate species. Two-qubit matrices use the local index `b0 + 2*b1`, where
/// `b0` is the bit of the first listed qubit.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cnot { control: usize, target: usize },
    Swap(usize, usize),
    CRy { control: usize, target: usize, theta: f64 },
    CRz { control: usize, target: usize, phi: f64 },
    Dense2 { qubits: [usize; 2], matrix: Box<Matrix4> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateClass {
    Single,
    Two,
}

impl Gate {
    pub fn class(&self) -> GateClass {
        match self {
            Gate::X(_) | Gate::H(_) | Gate::Rx(..) | Gate::Ry(..) | Gate::Rz(..) => GateClass::Single,
            _ => GateClass::Two,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Cnot { control, target }
            | Gate::CRy { control, target, .. }
            | Gate::CRz { control, target, .. } => vec![control, target],
            Gate::Swap(a, b) => vec![a, b],
            Gate::Dense2 { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn species(&self) -> &'static str {
        match self {
            Gate::X(_) => "x",
            Gate::H(_) => "h",
            Gate::Rx(..) => "rx",
            Gate::Ry(..) => "ry",
            Gate::Rz(..) => "rz",
            Gate::Cnot { .. } => "cnot",
            Gate::Swap(..) => "swap",
            Gate::CRy { .. } => "cry",
            Gate::CRz { .. } => "crz",
            Gate::Dense2 { .. } => "dense2",
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, a) | Gate::Ry(_, a) | Gate::Rz(_, a) => Some(a),
            Gate::CRy { theta, .. } => Some(theta),
            Gate::CRz { phi, .. } => Some(phi),
            _ => None,
        }
    }

    /// Local 2x2 matrix of a single-qubit gate.
    pub fn matrix1(&self) -> Option<Matrix2> {
        let m = match *self {
            Gate::X(_) => [[ZERO, ONE], [ONE, ZERO]],
            Gate::H(_) => {
                let h = C64::new(FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::Rx(_, t) => rx(t),
            Gate::Ry(_, t) => ry(t),
            Gate::Rz(_, t) => rz(t),
            _ => return None,
        };
        Some(m)
    }

    /// Local 4x4 matrix of a two-qubit gate, ordered by [`Gate::qubits`].
    pub fn matrix2(&self) -> Option<Matrix4> {
        let m = match self {
            Gate::Cnot { .. } => controlled(&[[ZERO, ONE], [ONE, ZERO]]),
            Gate::CRy { theta, .. } => controlled(&ry(*theta)),
            Gate::CRz { phi, .. } => controlled(&rz(*phi)),
            Gate::Swap(..) => {
                let mut m = [[ZERO; 4]; 4];
                m[0][0] = ONE;
                m[1][2] = ONE;
                m[2][1] = ONE;
                m[3][3] = ONE;
                m
            }
            Gate::Dense2 { matrix, .. } => **matrix,
            _ => return None,
        };
        Some(m)
    }

    /// Builds a checked dense two-qubit gate.
    pub fn dense(q0: usize, q1: usize, matrix: Matrix4) -> Result<Gate> {
        let dev = unitarity_deviation4(&matrix);
        if dev > 1e-9 {
            return Err(Error::NonUnitary(dev));
        }
        if q0 == q1 {
            return Err(Error::RepeatedQubit(q0));
        }
        Ok(Gate::Dense2 { qubits: [q0, q1], matrix: Box::new(matrix) })
    }
}

pub fn rx(t: f64) -> Matrix2 {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[C64::new(c, 0.0), C64::new(0.0, -s)], [C64::new(0.0, -s), C64::new(c, 0.0)]]
}

pub fn ry(t: f64) -> Matrix2 {
    let (c, s) = ((t / 2.0).cos(), (t / 2.0).sin());
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

pub fn rz(t: f64) -> Matrix2 {
    [[C64::from_polar(1.0, -t / 2.0), ZERO], [ZERO, C64::from_polar(1.0, t / 2.0)]]
}

/// Control on local bit 0, target on local bit 1.
fn controlled(u: &Matrix2) -> Matrix4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[2][2] = ONE;
    // control set: local indices 1 (target 0) and 3 (target 1)
    m[1][1] = u[0][0];
    m[1][3] = u[0][1];
    m[3][1] = u[1][0];
    m[3][3] = u[1][1];
    m
}

pub fn mul4(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn unitarity_deviation4(m: &Matrix4) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let s: C64 = (0..4).map(|k| m[k][i].conj() * m[k][j]).sum();
            let target = if i == j { ONE } else { ZERO };
            dev = dev.max((s - target).norm());
        }
    }
    dev
}

/// Lifts a single-qubit matrix on local bit `slot` (0 or 1) to a 4x4.
pub fn embed1(u: &Matrix2, slot: usize) -> Matrix4 {
    let mut m = [[ZERO; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let (rb, cb) = ((r >> slot) & 1, (c >> slot) & 1);
            let (ro, co) = ((r >> (1 - slot)) & 1, (c >> (1 - slot)) & 1);
            if ro == co {
                m[r][c] = u[rb][cb];
            }
        }
    }
    m
}

/// Dense 2^n-amplitude state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `num_qubits` qubits.
    pub fn new(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::OutOfRange(format!("basis index {index} >= {dim}")));
        }
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two. No normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("amplitude count {dim} is not a power of two")));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        Ok(Self { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_same_dim(other.dim())?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// Largest `|a_x - e^{i phi} b_x|` after aligning the global phase on the
    /// largest-magnitude amplitude of `other`.
    pub fn max_deviation_up_to_phase(&self, other: &StateVector) -> Result<f64> {
        self.check_same_dim(other.dim())?;
        let (k, _) = other
            .amplitudes
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bk, bm), (k, a)| if a.norm() > bm { (k, a.norm()) } else { (bk, bm) });
        let reference = other.amplitudes[k];
        let phase = if reference.norm() > 0.0 && self.amplitudes[k].norm() > 0.0 {
            let r = self.amplitudes[k] / reference;
            r / r.norm()
        } else {
            ONE
        };
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - phase * b).norm())
            .fold(0.0, f64::max))
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: self.num_qubits });
        }
        Ok(())
    }

    fn check_same_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), actual: len });
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        let qs = gate.qubits();
        for &q in &qs {
            self.check_qubit(q)?;
        }
        match gate {
            Gate::X(q) => {
                let bit = 1usize << q;
                for x in 0..self.dim() {
                    if x & bit == 0 {
                        self.amplitudes.swap(x, x | bit);
                    }
                }
            }
            Gate::Cnot { control, target } => {
                if control == target {
                    return Err(Error::RepeatedQubit(*control));
                }
                let (c, t) = (1usize << control, 1usize << target);
                for x in 0..self.dim() {
                    if x & c != 0 && x & t == 0 {
                        self.amplitudes.swap(x, x | t);
                    }
                }
            }
            Gate::Swap(a, b) => {
                if a == b {
                    return Err(Error::RepeatedQubit(*a));
                }
                let (ba, bb) = (1usize << a, 1usize << b);
                for x in 0..self.dim() {
                    if x & ba != 0 && x & bb == 0 {
                        self.amplitudes.swap(x, (x ^ ba) | bb);
                    }
                }
            }
            Gate::Dense2 { qubits, matrix } => {
                let dev = unitarity_deviation4(matrix);
                if dev > 1e-9 {
                    return Err(Error::NonUnitary(dev));
                }
                self.apply_two(qubits[0], qubits[1], matrix)?;
            }
            _ => match gate.class() {
                GateClass::Single => self.apply_one(qs[0], &gate.matrix1().expect("single-qubit matrix")),
                GateClass::Two => self.apply_two(qs[0], qs[1], &gate.matrix2().expect("two-qubit matrix"))?,
            },
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits != self.num_qubits {
            return Err(Error::LengthMismatch { expected: self.num_qubits, actual: circuit.num_qubits });
        }
        circuit.gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    pub(crate) fn apply_one(&mut self, q: usize, u: &Matrix2) {
        let bit = 1usize << q;
        for x in 0..self.dim() {
            if x & bit == 0 {
                let (a0, a1) = (self.amplitudes[x], self.amplitudes[x | bit]);
                self.amplitudes[x] = u[0][0] * a0 + u[0][1] * a1;
                self.amplitudes[x | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// Applies a local 4x4 matrix without a unitarity check.
    pub(crate) fn apply_two(&mut self, q0: usize, q1: usize, m: &Matrix4) -> Result<()> {
        if q0 == q1 {
            return Err(Error::RepeatedQubit(q0));
        }
        self.check_qubit(q0)?;
        self.check_qubit(q1)?;
        let (b0, b1) = (1usize << q0, 1usize << q1);
        let (lo, hi) = (q0.min(q1), q0.max(q1));
        let quarter = self.dim() >> 2;
        for k in 0..quarter {
            // insert zero bits at positions lo and hi
            let low_mask = (1usize << lo) - 1;
            let mut x = (k & low_mask) | ((k & !low_mask) << 1);
            let mid_mask = (1usize << hi) - 1;
            x = (x & mid_mask) | ((x & !mid_mask) << 1);
            let idx = [x, x | b0, x | b1, x | b0 | b1];
            let a = [self.amplitudes[idx[0]], self.amplitudes[idx[1]], self.amplitudes[idx[2]], self.amplitudes[idx[3]]];
            for r in 0..4 {
                self.amplitudes[idx[r]] = m[r][0] * a[0] + m[r][1] * a[1] + m[r][2] * a[2] + m[r][3] * a[3];
            }
        }
        Ok(())
    }

    /// Weight-preserving two-qubit block: `|00> -> d0 |00>`, the `{|01>, |10>}`
    /// block mixed by `block` (local index `bit(q0) + 2 bit(q1)`), `|11> -> d3 |11>`.
    pub(crate) fn apply_conserving(&mut self, q0: usize, q1: usize, d0: C64, block: &Matrix2, d3: C64) -> Result<()> {
        if q0 == q1 {
            return Err(Error::RepeatedQubit(q0));
        }
        self.check_qubit(q0)?;
        self.check_qubit(q1)?;
        let (b0, b1) = (1usize << q0, 1usize << q1);
        let both = b0 | b1;
        let trivial0 = d0 == ONE;
        let trivial3 = d3 == ONE;
        for x in 0..self.dim() {
            if x & both != 0 {
                continue;
            }
            if !trivial0 {
                self.amplitudes[x] *= d0;
            }
            let (i1, i2) = (x | b0, x | b1);
            let (a1, a2) = (self.amplitudes[i1], self.amplitudes[i2]);
            self.amplitudes[i1] = block[0][0] * a1 + block[0][1] * a2;
            self.amplitudes[i2] = block[1][0] * a1 + block[1][1] * a2;
            if !trivial3 {
                self.amplitudes[x | both] *= d3;
            }
        }
        Ok(())
    }

    /// `amplitude(x) *= exp(-i * gamma * energies[x])`.
    pub fn apply_diagonal_phase(&mut self, energies: &[f64], gamma: f64) -> Result<()> {
        self.check_same_dim(energies.len())?;
        for (a, &e) in self.amplitudes.iter_mut().zip(energies) {
            *a *= C64::from_polar(1.0, -gamma * e);
        }
        Ok(())
    }

    /// `sum_x |a_x|^2 * energies[x]`.
    pub fn expectation_diagonal(&self, energies: &[f64]) -> Result<f64> {
        self.check_same_dim(energies.len())?;
        Ok(self.amplitudes.iter().zip(energies).map(|(a, e)| a.norm_sqr() * e).sum())
    }

    /// Probability mass on basis strings of Hamming weight `hamming_weight`.
    pub fn sector_weight(&self, hamming_weight: usize) -> Result<f64> {
        if hamming_weight > self.num_qubits {
            return Err(Error::OutOfRange(format!(
                "hamming weight {hamming_weight} > {} qubits",
                self.num_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(x, _)| x.count_ones() as usize == hamming_weight)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Probability mass per Hamming weight, indexed 0..=n.
    pub fn weight_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.num_qubits + 1];
        for (x, a) in self.amplitudes.iter().enumerate() {
            out[x.count_ones() as usize] += a.norm_sqr();
        }
        out
    }
}

/// Ordered gate list over a fixed register.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct GateCounts {
    pub single: i64,
    pub two: i64,
}

impl GateCounts {
    pub fn new(single: i64, two: i64) -> Self {
        Self { single, two }
    }
}

impl std::ops::Add for GateCounts {
    type Output = GateCounts;
    fn add(self, o: GateCounts) -> GateCounts {
        GateCounts::new(self.single + o.single, self.two + o.two)
    }
}

impl std::ops::Mul<i64> for GateCounts {
    type Output = GateCounts;
    fn mul(self, k: i64) -> GateCounts {
        GateCounts::new(self.single * k, self.two * k)
    }
}

impl fmt::Display for GateCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.single, self.two)
    }
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: Circuit) {
        self.gates.extend(other.gates);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn counts(&self) -> GateCounts {
        self.gates.iter().fold(GateCounts::default(), |acc, g| match g.class() {
            GateClass::Single => GateCounts::new(acc.single + 1, acc.two),
            GateClass::Two => GateCounts::new(acc.single, acc.two + 1),
        })
    }

    /// One gate per line: `species q.. [angle]`; dense gates list 16 `re,im` entries row-major.
    pub fn dump(&self) -> String {
        let mut out = format!("# qubits {}\n", self.num_qubits);
        for g in &self.gates {
            out.push_str(g.species());
            for q in g.qubits() {
                out.push_str(&format!(" q{q}"));
            }
            if let Some(a) = g.angle() {
                out.push_str(&format!(" {a:?}"));
            }
            if let Gate::Dense2 { matrix, .. } = g {
                for row in matrix.iter() {
                    for z in row {
                        out.push_str(&format!(" {:?},{:?}", z.re, z.im));
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Circuit> {
        let bad = |line: &str| Error::Format(format!("bad circuit line `{line}`"));
        let mut circuit = Circuit::new(0);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix("# qubits ") {
                circuit.num_qubits = rest.trim().parse().map_err(|_| bad(line))?;
                continue;
            }
            let mut parts = line.split_whitespace();
            let species = parts.next().ok_or_else(|| bad(line))?;
            let rest: Vec<&str> = parts.collect();
            let qubits: Vec<usize> = rest
                .iter()
                .filter_map(|t| t.strip_prefix('q'))
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(line))?;
            let numbers: Vec<&str> = rest.iter().filter(|t| !t.starts_with('q')).copied().collect();
            let angle = || -> Result<f64> {
                numbers.first().and_then(|t| t.parse().ok()).ok_or_else(|| bad(line))
            };
            let q = |i: usize| qubits.get(i).copied().ok_or_else(|| bad(line));
            let gate = match species {
                "x" => Gate::X(q(0)?),
                "h" => Gate::H(q(0)?),
                "rx" => Gate::Rx(q(0)?, angle()?),
                "ry" => Gate::Ry(q(0)?, angle()?),
                "rz" => Gate::Rz(q(0)?, angle()?),
                "cnot" => Gate::Cnot { control: q(0)?, target: q(1)? },
                "swap" => Gate::Swap(q(0)?, q(1)?),
                "cry" => Gate::CRy { control: q(0)?, target: q(1)?, theta: angle()? },
                "crz" => Gate::CRz { control: q(0)?, target: q(1)?, phi: angle()? },
                "dense2" => {
                    if numbers.len() != 16 {
                        return Err(bad(line));
                    }
                    let mut m = [[ZERO; 4]; 4];
                    for (k, tok) in numbers.iter().enumerate() {
                        let (re, im) = tok.split_once(',').ok_or_else(|| bad(line))?;
                        m[k / 4][k % 4] =
                            C64::new(re.parse().map_err(|_| bad(line))?, im.parse().map_err(|_| bad(line))?);
                    }
                    Gate::Dense2 { qubits: [q(0)?, q(1)?], matrix: Box::new(m) }
                }
                _ => return Err(bad(line)),
            };
            circuit.push(gate);
        }
        Ok(circuit)
    }

    /// Product of the circuit as a dense 2^n x 2^n matrix (small n only; used by tests).
    pub fn unitary(&self) -> Result<Vec<Vec<C64>>> {
        let dim = 1usize << self.num_qubits;
        let mut cols = Vec::with_capacity(dim);
        for x in 0..dim {
            let mut s = StateVector::basis(self.num_qubits, x)?;
            s.apply_circuit(self)?;
            cols.push(s.into_amplitudes());
        }
        Ok((0..dim).map(|r| (0..dim).map(|c| cols[c][r]).collect()).collect())
    }
}
