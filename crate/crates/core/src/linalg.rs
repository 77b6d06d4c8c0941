//! Small dense complex matrices for single-particle (orbital) algebra.

use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        out
    }

    /// Keeps the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_fn(rows.len(), self.cols, |r, c| self[(rows[r], c)])
    }

    /// Keeps the listed columns, in order.
    pub fn select_cols(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |r, c| self[(r, cols[c])])
    }

    /// `max |A A^dagger - I|` over entries.
    pub fn row_orthonormality_error(&self) -> f64 {
        let g = self.matmul(&self.adjoint());
        let mut dev: f64 = 0.0;
        for r in 0..g.rows {
            for c in 0..g.cols {
                let target = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((g[(r, c)] - target).norm());
            }
        }
        dev
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Determinant by partial-pivot LU (square matrices only).
    pub fn determinant(&self) -> C64 {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .expect("non-empty");
            if a[(pivot, col)].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if pivot != col {
                for c in 0..n {
                    a.data.swap(pivot * n + c, col * n + c);
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for r in col + 1..n {
                let f = a[(r, col)] / p;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for c in col..n {
                    let v = a[(col, c)];
                    a[(r, c)] -= f * v;
                }
            }
        }
        det
    }

    /// Applies the 2x2 matrix `g` to rows `(r0, r1)`: `[r0; r1] <- g [r0; r1]`.
    pub fn rotate_rows(&mut self, r0: usize, r1: usize, g: [[C64; 2]; 2]) {
        for c in 0..self.cols {
            let (a, b) = (self[(r0, c)], self[(r1, c)]);
            self[(r0, c)] = g[0][0] * a + g[0][1] * b;
            self[(r1, c)] = g[1][0] * a + g[1][1] * b;
        }
    }

    /// Right-multiplies columns `(c0, c1)` by the 2x2 matrix `g`: `[c0 c1] <- [c0 c1] g`.
    pub fn rotate_cols(&mut self, c0: usize, c1: usize, g: [[C64; 2]; 2]) {
        for r in 0..self.rows {
            let (a, b) = (self[(r, c0)], self[(r, c1)]);
            self[(r, c0)] = a * g[0][0] + b * g[1][0];
            self[(r, c1)] = a * g[0][1] + b * g[1][1];
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_small_cases() {
        let m = CMatrix::from_fn(2, 2, |r, c| C64::new([[1.0, 2.0], [3.0, 4.0]][r][c], 0.0));
        assert!((m.determinant() - C64::new(-2.0, 0.0)).norm() < 1e-14);
        let p = CMatrix::from_fn(3, 3, |r, c| if (r + 1) % 3 == c { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        assert!((p.determinant() - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((CMatrix::identity(5).determinant() - C64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn adjoint_product_of_identity() {
        let i = CMatrix::identity(4);
        assert_eq!(i.row_orthonormality_error(), 0.0);
        assert_eq!(i.matmul(&i.adjoint()), i);
    }
}
