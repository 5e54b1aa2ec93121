//! The `A⁻¹`-application capability consumed by the update solvers.
//!
//! A [`BaseSolver`] never materializes `A⁻¹`; it only applies it to blocks of
//! right-hand sides. Three backings are provided: a dense LU factorization,
//! a diagonal matrix, and a caller-supplied solve oracle through which
//! banded or otherwise structured solvers can be plugged in.
//!
//! Oracles must be pure, deterministic and reentrant: the same input must
//! always produce bit-identical output, and concurrent calls must be safe.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SmwError};
use crate::lu::{LuFactors, PIVOT_TOLERANCE};
use crate::matrix::DenseMatrix;

/// Maps an `n x r` right-hand side block to the `n x r` solution block.
pub type SolveFn = dyn Fn(&DenseMatrix) -> std::result::Result<DenseMatrix, String> + Send + Sync;

/// Maps `x` to `A·x`; used only for residual reporting.
pub type ApplyFn = dyn Fn(&DenseMatrix) -> DenseMatrix + Send + Sync;

#[derive(Clone)]
enum Backing {
    DenseLu {
        factors: LuFactors,
        matrix: DenseMatrix,
    },
    Diagonal(Vec<f64>),
    Oracle {
        solve: Arc<SolveFn>,
        apply: Option<Arc<ApplyFn>>,
    },
}

#[derive(Clone)]
pub struct BaseSolver {
    n: usize,
    backing: Backing,
}

/// Which backing a [`BaseSolver`] uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    DenseLu,
    Diagonal,
    Oracle,
}

impl BaseSolver {
    /// LU-factors `a` with partial pivoting.
    pub fn factor_dense(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(SmwError::DimensionMismatch(format!(
                "base matrix must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        if !a.all_finite() {
            return Err(SmwError::NonFiniteInput("base matrix".into()));
        }
        let factors = LuFactors::factor(a).map_err(|p| SmwError::SingularBase {
            index: p.index,
            pivot: p.pivot,
            threshold: p.threshold,
        })?;
        Ok(Self {
            n: a.rows(),
            backing: Backing::DenseLu {
                factors,
                matrix: a.clone(),
            },
        })
    }

    /// `A = diag(d)`. Entries smaller than `1e-14 · max|dᵢ|` are singular.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(SmwError::EmptyMatrix { rows: 0, cols: 0 });
        }
        if !diag.iter().all(|d| d.is_finite()) {
            return Err(SmwError::NonFiniteInput("diagonal base".into()));
        }
        let threshold = PIVOT_TOLERANCE * diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if let Some((index, d)) = diag
            .iter()
            .enumerate()
            .find(|(_, d)| **d == 0.0 || d.abs() < threshold)
        {
            return Err(SmwError::SingularBase {
                index,
                pivot: d.abs(),
                threshold,
            });
        }
        Ok(Self {
            n: diag.len(),
            backing: Backing::Diagonal(diag.to_vec()),
        })
    }

    /// `A = Iₙ`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_diagonal(&vec![1.0; n])
    }

    /// Wraps a caller-supplied solve callback. Residuals cannot be reported
    /// for such a base unless a forward operator is attached with
    /// [`BaseSolver::with_operator`].
    pub fn from_oracle<F>(n: usize, solve: F) -> Self
    where
        F: Fn(&DenseMatrix) -> std::result::Result<DenseMatrix, String> + Send + Sync + 'static,
    {
        Self {
            n,
            backing: Backing::Oracle {
                solve: Arc::new(solve),
                apply: None,
            },
        }
    }

    /// Attaches `x ↦ A·x` to an oracle-backed solver. No effect on other kinds.
    pub fn with_operator<F>(mut self, op: F) -> Self
    where
        F: Fn(&DenseMatrix) -> DenseMatrix + Send + Sync + 'static,
    {
        if let Backing::Oracle { apply, .. } = &mut self.backing {
            *apply = Some(Arc::new(op));
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> BaseKind {
        match self.backing {
            Backing::DenseLu { .. } => BaseKind::DenseLu,
            Backing::Diagonal(_) => BaseKind::Diagonal,
            Backing::Oracle { .. } => BaseKind::Oracle,
        }
    }

    /// Returns `X` with `A·X = rhs`, one column at a time.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.rows() != self.n {
            return Err(SmwError::DimensionMismatch(format!(
                "right-hand side has {} rows, base dimension is {}",
                rhs.rows(),
                self.n
            )));
        }
        match &self.backing {
            Backing::DenseLu { factors, .. } => Ok(factors.solve(rhs)),
            Backing::Diagonal(d) => {
                let cols = rhs.cols();
                let data = rhs
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| v / d[idx / cols])
                    .collect();
                Ok(DenseMatrix::from_raw(self.n, cols, data))
            }
            Backing::Oracle { solve, .. } => {
                let out = solve(rhs).map_err(SmwError::OracleFailure)?;
                if out.shape() != rhs.shape() {
                    return Err(SmwError::OracleFailure(format!(
                        "returned {}x{} for a {}x{} right-hand side",
                        out.rows(),
                        out.cols(),
                        rhs.rows(),
                        rhs.cols()
                    )));
                }
                if !out.all_finite() {
                    return Err(SmwError::OracleFailure("returned non-finite values".into()));
                }
                Ok(out)
            }
        }
    }

    /// `A·x`, when the backing knows `A`.
    pub fn apply(&self, x: &DenseMatrix) -> Option<DenseMatrix> {
        match &self.backing {
            Backing::DenseLu { matrix, .. } => matrix.matmul(x).ok(),
            Backing::Diagonal(d) => {
                let cols = x.cols();
                let data = x
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(idx, v)| v * d[idx / cols])
                    .collect();
                Some(DenseMatrix::from_raw(self.n, cols, data))
            }
            Backing::Oracle { apply, .. } => apply.as_ref().map(|f| f(x)),
        }
    }
}

impl fmt::Debug for BaseSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseSolver")
            .field("n", &self.n)
            .field("kind", &self.kind())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor_is_exact() {
        let base = BaseSolver::factor_dense(&DenseMatrix::identity(4)).unwrap();
        let b = DenseMatrix::column_vector(&[1.5, -2.0, 0.25, 7.0]).unwrap();
        assert_eq!(base.solve(&b).unwrap(), b);
    }

    #[test]
    fn permutation_matrix_exercises_pivoting() {
        let a = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let base = BaseSolver::factor_dense(&a).unwrap();
        let x = base
            .solve(&DenseMatrix::column_vector(&[3.0, 5.0]).unwrap())
            .unwrap();
        assert_eq!(x.as_slice(), &[5.0, 3.0]);
    }

    #[test]
    fn rank_one_matrix_is_singular() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(
            BaseSolver::factor_dense(&a),
            Err(SmwError::SingularBase { index: 1, .. })
        ));
    }

    #[test]
    fn non_square_rejected() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(
            BaseSolver::factor_dense(&a),
            Err(SmwError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn diagonal_solve() {
        let base = BaseSolver::from_diagonal(&[2.0, 4.0]).unwrap();
        let x = base
            .solve(&DenseMatrix::column_vector(&[2.0, 4.0]).unwrap())
            .unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
        assert!(matches!(
            BaseSolver::from_diagonal(&[1.0, 0.0]),
            Err(SmwError::SingularBase { index: 1, .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = DenseMatrix::from_rows(&[&[3.0, 1.0], &[-1.0, 2.0]]).unwrap();
        let zero = DenseMatrix::zeros(2, 3);
        for base in [
            BaseSolver::factor_dense(&a).unwrap(),
            BaseSolver::from_diagonal(&[2.0, 5.0]).unwrap(),
        ] {
            assert!(base.solve(&zero).unwrap().as_slice().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn wrong_rhs_rows() {
        let base = BaseSolver::identity(3).unwrap();
        assert!(matches!(
            base.solve(&DenseMatrix::zeros(2, 1)),
            Err(SmwError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn oracle_maps() {
        let id = BaseSolver::from_oracle(2, |b| Ok(b.clone()));
        let half = BaseSolver::from_oracle(2, |b| Ok(b.scale(0.5)));
        let b = DenseMatrix::column_vector(&[4.0, -2.0]).unwrap();
        assert_eq!(id.solve(&b).unwrap(), b);
        assert_eq!(half.solve(&b).unwrap().as_slice(), &[2.0, -1.0]);
        assert_eq!(id.kind(), BaseKind::Oracle);
        assert!(id.apply(&b).is_none());
        let half = half.with_operator(|x| x.scale(2.0));
        assert_eq!(half.apply(&b).unwrap().as_slice(), &[8.0, -4.0]);
    }

    #[test]
    fn oracle_failures_surface_on_solve() {
        let failing = BaseSolver::from_oracle(2, |_| Err("boom".into()));
        let b = DenseMatrix::column_vector(&[1.0, 1.0]).unwrap();
        assert_eq!(
            failing.solve(&b).unwrap_err(),
            SmwError::OracleFailure("boom".into())
        );
        let wrong_shape = BaseSolver::from_oracle(2, |_| Ok(DenseMatrix::zeros(3, 1)));
        assert!(matches!(
            wrong_shape.solve(&b),
            Err(SmwError::OracleFailure(_))
        ));
    }
}
