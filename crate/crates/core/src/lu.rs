//! LU factorization with partial (row) pivoting.
//!
//! Shared by the dense base solver and the capacitance matrix. Rows are
//! swapped physically so that `P·A = L·U`, with `L` unit lower triangular
//! stored below the diagonal and `U` on and above it.

use crate::matrix::DenseMatrix;

/// Relative pivot threshold: a pivot is rejected when its magnitude falls
/// below this factor times `|A|∞`.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// The pivot that failed the threshold test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub index: usize,
    pub pivot: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    /// Row `i` of `L·U` is row `perm[i]` of the original matrix.
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors a square matrix. Callers guarantee squareness.
    pub fn factor(a: &DenseMatrix) -> Result<Self, PivotFailure> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows();
        let threshold = PIVOT_TOLERANCE * a.norm_inf();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k]))
                .fold((k, 0.0f64), |best, (i, v)| {
                    if v.abs() > best.1.abs() {
                        (i, v)
                    } else {
                        best
                    }
                });
            if pivot == 0.0 || pivot.abs() < threshold {
                return Err(PivotFailure {
                    index: k,
                    pivot: pivot.abs(),
                    threshold,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }

            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n + k + 1..k * n + n];
            for row in lower.chunks_exact_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                        *x -= factor * u;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A·x = b` in place for a single right-hand side.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
        b.copy_from_slice(&y);
    }

    /// Solves `A·X = B` column by column.
    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(rhs.rows(), self.n);
        let cols = rhs.cols();
        let mut out = DenseMatrix::zeros(self.n, cols);
        let mut buf = vec![0.0; self.n];
        for j in 0..cols {
            for (i, v) in buf.iter_mut().enumerate() {
                *v = rhs.get(i, j);
            }
            self.solve_in_place(&mut buf);
            for (i, v) in buf.iter().enumerate() {
                out.set(i, j, *v);
            }
        }
        out
    }

    /// Rebuilds `Pᵀ·L·U`, which should reproduce the factored matrix.
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.n;
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let upto = i.min(j);
                let mut s: f64 = (0..upto).map(|k| self.lu[i * n + k] * self.lu[k * n + j]).sum();
                // unit diagonal of L
                if i <= j {
                    s += self.lu[i * n + j];
                } else {
                    s += self.lu[i * n + j] * self.lu[j * n + j];
                }
                out.set(self.perm[i], j, s);
            }
        }
        out
    }
}
