//! Brute-force ground truth: materialize `A + Σ Uₖ Vₖᵀ` and solve it directly.
//!
//! Nothing here goes through the base solver, the LU kernel or the
//! update-stacking code. Elimination is its own routine working on an
//! augmented row array. Cost is `O(n³)` per call.

use crate::error::{Result, SmwError};
use crate::lu::PIVOT_TOLERANCE;
use crate::matrix::DenseMatrix;
use crate::updates::UpdateSet;

/// The left-hand side `A + Σ Uₖ Vₖᵀ`, materialized.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub total: DenseMatrix,
    pub n: usize,
    pub pairs: usize,
    pub total_rank: usize,
}

/// Dense accumulation of the outer products, summed in pair order.
pub fn assemble_total(a: &DenseMatrix, updates: &UpdateSet) -> Result<AssembledSystem> {
    let n = updates.n();
    if a.shape() != (n, n) {
        return Err(SmwError::DimensionMismatch(format!(
            "base is {}x{}, updates expect {n}x{n}",
            a.rows(),
            a.cols()
        )));
    }
    let mut total = a.as_slice().to_vec();
    for pair in updates.pairs() {
        let (u, v) = (pair.u(), pair.v());
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for c in 0..u.cols() {
                    s += u[(i, c)] * v[(j, c)];
                }
                total[i * n + j] += s;
            }
        }
    }
    Ok(AssembledSystem {
        total: DenseMatrix::new(n, n, total)?,
        n,
        pairs: updates.len(),
        total_rank: updates.total_rank(),
    })
}

/// Gaussian elimination with partial pivoting on `[matrix | rhs]`, followed
/// by back substitution. Returns the failing pivot on singularity.
fn eliminate(matrix: &DenseMatrix, rhs: &DenseMatrix) -> std::result::Result<DenseMatrix, (usize, f64, f64)> {
    let n = matrix.rows();
    let r = rhs.cols();
    let threshold = PIVOT_TOLERANCE * matrix.norm_inf();
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = matrix.row(i).to_vec();
            row.extend_from_slice(rhs.row(i));
            row
        })
        .collect();

    for col in 0..n {
        let mut best = col;
        for i in col + 1..n {
            if rows[i][col].abs() > rows[best][col].abs() {
                best = i;
            }
        }
        let pivot = rows[best][col];
        if pivot == 0.0 || pivot.abs() < threshold {
            return Err((col, pivot.abs(), threshold));
        }
        rows.swap(col, best);
        let (upper, lower) = rows.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            let f = row[col] / pivot;
            if f == 0.0 {
                continue;
            }
            for (dst, &p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * p;
            }
        }
    }

    let mut x = vec![0.0; n * r];
    for c in 0..r {
        for i in (0..n).rev() {
            let mut s = rows[i][n + c];
            for j in i + 1..n {
                s -= rows[i][j] * x[j * r + c];
            }
            x[i * r + c] = s / rows[i][i];
        }
    }
    Ok(DenseMatrix::from_raw(n, r, x))
}

/// Direct dense solve of the assembled system.
pub fn oracle_solve(sys: &AssembledSystem, b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != sys.n {
        return Err(SmwError::DimensionMismatch(format!(
            "right-hand side has {} rows, system dimension is {}",
            b.rows(),
            sys.n
        )));
    }
    eliminate(&sys.total, b).map_err(|(index, pivot, threshold)| SmwError::SingularTotal {
        index,
        pivot,
        threshold,
    })
}

pub fn oracle_inverse(sys: &AssembledSystem) -> Result<DenseMatrix> {
    oracle_solve(sys, &DenseMatrix::identity(sys.n))
}

/// `I + CᵀA⁻¹B` computed from scratch: a direct solve for `A⁻¹B`, then
/// explicit products over the concatenated factors.
pub fn oracle_capacitance(a: &DenseMatrix, updates: &UpdateSet) -> Result<DenseMatrix> {
    let n = updates.n();
    if a.shape() != (n, n) {
        return Err(SmwError::DimensionMismatch(format!(
            "base is {}x{}, updates expect {n}x{n}",
            a.rows(),
            a.cols()
        )));
    }
    if updates.is_empty() {
        return Err(SmwError::EmptyUpdates);
    }
    let dim = updates.total_rank();
    let mut b = vec![0.0; n * dim];
    let mut c = vec![0.0; n * dim];
    let mut offset = 0;
    for pair in updates.pairs() {
        for i in 0..n {
            for k in 0..pair.rank() {
                b[i * dim + offset + k] = pair.u()[(i, k)];
                c[i * dim + offset + k] = pair.v()[(i, k)];
            }
        }
        offset += pair.rank();
    }
    let b = DenseMatrix::from_raw(n, dim, b);
    let ainv_b = eliminate(a, &b).map_err(|(index, pivot, threshold)| SmwError::SingularBase {
        index,
        pivot,
        threshold,
    })?;
    let mut m = vec![0.0; dim * dim];
    for p in 0..dim {
        for q in 0..dim {
            let mut s = if p == q { 1.0 } else { 0.0 };
            for i in 0..n {
                s += c[i * dim + p] * ainv_b[(i, q)];
            }
            m[p * dim + q] = s;
        }
    }
    Ok(DenseMatrix::from_raw(dim, dim, m))
}

/// `maxᵢⱼ |xᵢⱼ − yᵢⱼ| / |yᵢⱼ|`, with the denominator floored at
/// `f64::EPSILON · max|y|` so exact zeros in `y` do not divide by zero.
pub fn componentwise_relative_error(x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(SmwError::DimensionMismatch("compared matrices differ in shape".into()));
    }
    let floor = f64::EPSILON * y.max_abs();
    Ok(x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| {
            let diff = (a - b).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / b.abs().max(floor).max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max))
}

/// `max|x − y| / max|y|` (or the absolute difference when `y = 0`).
pub fn relative_max_error(x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    let diff = x.max_abs_diff(y)?;
    let scale = y.max_abs();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}
