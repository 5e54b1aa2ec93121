//! Solves and inverses of `A + Σₖ Uₖ·Vₖᵀ` through the blocked
//! Sherman–Morrison–Woodbury identity
//!
//! ```text
//! (A + Σ Uₖ Vₖᵀ)⁻¹ = A⁻¹ − A⁻¹ [U₁ … U_N] M⁻¹ [V₁ … V_N]ᵀ A⁻¹
//! ```
//!
//! where the capacitance matrix `M` has blocks
//! `M[j][k] = δⱼₖ·I + Vⱼᵀ A⁻¹ Uₖ`.
//!
//! `A⁻¹` is only ever applied through a [`BaseSolver`]; no `n x n` inverse is
//! formed except when [`smw_inverse`] is explicitly asked for one. The
//! blocked path ([`build_solver`], [`smw_solve`]) assembles `M` block by
//! block; [`collapsed_solve`] treats all pairs as one wide update and serves
//! as a second implementation for cross-checking.

use std::time::Instant;

use crate::base::BaseSolver;
use crate::error::{Result, SmwError};
use crate::lu::{LuFactors, PivotFailure};
use crate::matrix::DenseMatrix;
use crate::updates::{stack_updates, UpdateSet};

fn singular_capacitance(p: PivotFailure) -> SmwError {
    SmwError::SingularCapacitance {
        index: p.index,
        pivot: p.pivot,
        threshold: p.threshold,
    }
}

fn check_base_dim(base: &BaseSolver, updates: &UpdateSet) -> Result<()> {
    if base.dim() != updates.n() {
        return Err(SmwError::DimensionMismatch(format!(
            "base dimension {} differs from update dimension {}",
            base.dim(),
            updates.n()
        )));
    }
    Ok(())
}

fn check_rhs(n: usize, b: &DenseMatrix) -> Result<()> {
    if b.rows() != n {
        return Err(SmwError::DimensionMismatch(format!(
            "right-hand side has {} rows, system dimension is {n}",
            b.rows()
        )));
    }
    if !b.all_finite() {
        return Err(SmwError::NonFiniteInput("right-hand side".into()));
    }
    Ok(())
}

/// The assembled and factored `M`, of order `Σmₖ`.
#[derive(Debug, Clone)]
pub struct CapacitanceMatrix {
    matrix: DenseMatrix,
    factors: LuFactors,
    block_offsets: Vec<usize>,
}

impl CapacitanceMatrix {
    fn from_matrix(matrix: DenseMatrix, block_offsets: Vec<usize>) -> Result<Self> {
        let factors = LuFactors::factor(&matrix).map_err(singular_capacitance)?;
        Ok(Self {
            matrix,
            factors,
            block_offsets,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// The unfactored `M`.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Prefix sums of the pair ranks; block `(j, k)` occupies rows
    /// `offsets[j]..offsets[j+1]` and columns `offsets[k]..offsets[k+1]`.
    pub fn block_offsets(&self) -> &[usize] {
        &self.block_offsets
    }

    /// Block `(j, k)` of `M`.
    pub fn block(&self, j: usize, k: usize) -> DenseMatrix {
        let o = &self.block_offsets;
        self.matrix
            .row_block(o[j], o[j + 1])
            .column_block(o[k], o[k + 1])
    }

    /// `P⁻¹·L·U` from the stored factorization.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.factors.reconstruct()
    }

    /// Solves `M·T = W`.
    pub fn solve(&self, rhs: &DenseMatrix) -> DenseMatrix {
        self.factors.solve(rhs)
    }
}

/// Block `(j, k)` is `Vⱼᵀ·Yₖ`, plus the identity on the diagonal, where `Y`
/// holds `A⁻¹Uₖ` in its column blocks.
fn assemble_blocks(updates: &UpdateSet, y: &DenseMatrix) -> Result<DenseMatrix> {
    let offsets = updates.block_offsets();
    let dim = updates.total_rank();
    let mut m = DenseMatrix::zeros(dim, dim);
    for (j, pair) in updates.pairs().iter().enumerate() {
        for k in 0..updates.len() {
            let yk = y.column_block(offsets[k], offsets[k + 1]);
            let block = pair.v().transpose_matmul(&yk)?;
            for r in 0..block.rows() {
                for c in 0..block.cols() {
                    let delta = if j == k && r == c { 1.0 } else { 0.0 };
                    m.set(offsets[j] + r, offsets[k] + c, delta + block.get(r, c));
                }
            }
        }
    }
    Ok(m)
}

fn solve_updates_against_base(base: &BaseSolver, updates: &UpdateSet) -> Result<DenseMatrix> {
    let stacked = stack_updates(updates)?;
    base.solve(&stacked.b)
}

/// Assembles and factors `M`. Performs exactly `Σmₖ` base solves, one per
/// column of `[U₁ … U_N]`, issued as a single batched call.
pub fn assemble_capacitance(base: &BaseSolver, updates: &UpdateSet) -> Result<CapacitanceMatrix> {
    check_base_dim(base, updates)?;
    let y = solve_updates_against_base(base, updates)?;
    let m = assemble_blocks(updates, &y)?;
    CapacitanceMatrix::from_matrix(m, updates.block_offsets().to_vec())
}

/// Diagnostics for one [`SmwSolver::solve`] call.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub n: usize,
    /// Number of update pairs `N`.
    pub pairs: usize,
    pub total_rank: usize,
    /// `‖(A + Σ UV ᵀ)x − b‖_F / ‖b‖_F`; `None` when the base cannot apply `A`.
    pub relative_residual: Option<f64>,
    /// Base solves (right-hand-side columns) spent in this call.
    pub base_solve_count: usize,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

struct Correction {
    cap: CapacitanceMatrix,
    /// `A⁻¹·[U₁ … U_N]`.
    y_cache: DenseMatrix,
}

/// A reusable solver for `(A + Σ Uₖ Vₖᵀ)·x = b`.
///
/// Construction does all the work that depends only on `A` and the updates;
/// each subsequent solve costs one base solve per right-hand-side column
/// plus `O(n·Σmₖ + (Σmₖ)²)`. Solving mutates nothing, so a solver can be
/// shared between threads.
pub struct SmwSolver<'a> {
    base: &'a BaseSolver,
    updates: &'a UpdateSet,
    correction: Option<Correction>,
}

/// Precomputes `A⁻¹B` and the factored capacitance matrix. An empty update
/// set yields a pass-through solver.
pub fn build_solver<'a>(base: &'a BaseSolver, updates: &'a UpdateSet) -> Result<SmwSolver<'a>> {
    check_base_dim(base, updates)?;
    let correction = if updates.is_empty() {
        None
    } else {
        let y_cache = solve_updates_against_base(base, updates)?;
        let m = assemble_blocks(updates, &y_cache)?;
        let cap = CapacitanceMatrix::from_matrix(m, updates.block_offsets().to_vec())?;
        Some(Correction { cap, y_cache })
    };
    Ok(SmwSolver {
        base,
        updates,
        correction,
    })
}

impl<'a> SmwSolver<'a> {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn updates(&self) -> &UpdateSet {
        self.updates
    }

    pub fn capacitance(&self) -> Option<&CapacitanceMatrix> {
        self.correction.as_ref().map(|c| &c.cap)
    }

    /// `A⁻¹·[U₁ … U_N]`, if there are updates.
    pub fn y_cache(&self) -> Option<&DenseMatrix> {
        self.correction.as_ref().map(|c| &c.y_cache)
    }

    /// `x = A⁻¹b − (A⁻¹B)·M⁻¹·(Cᵀ·A⁻¹b)` without a residual report.
    pub fn apply_inverse(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_rhs(self.dim(), b)?;
        let z = self.base.solve(b)?;
        let Some(corr) = &self.correction else {
            return Ok(z);
        };
        let offsets = self.updates.block_offsets();
        let mut w = DenseMatrix::zeros(self.updates.total_rank(), b.cols());
        for (k, pair) in self.updates.pairs().iter().enumerate() {
            let wk = pair.v().transpose_matmul(&z)?;
            for r in 0..wk.rows() {
                for c in 0..wk.cols() {
                    w.set(offsets[k] + r, c, wk.get(r, c));
                }
            }
        }
        let t = corr.cap.solve(&w);
        z.sub(&corr.y_cache.matmul(&t)?)
    }

    /// Solves for every column of `b` and reports the residual.
    pub fn solve(&self, b: &DenseMatrix) -> Result<(DenseMatrix, SolveReport)> {
        let start = Instant::now();
        let x = self.apply_inverse(b)?;
        let elapsed = start.elapsed().as_secs_f64();
        let relative_residual = self.relative_residual(&x, b)?;
        let report = SolveReport {
            n: self.dim(),
            pairs: self.updates.len(),
            total_rank: self.updates.total_rank(),
            relative_residual,
            base_solve_count: b.cols(),
            elapsed,
        };
        Ok((x, report))
    }

    /// `‖(A + Σ UV ᵀ)x − b‖_F / ‖b‖_F`, or the absolute residual norm when `b = 0`.
    pub fn relative_residual(&self, x: &DenseMatrix, b: &DenseMatrix) -> Result<Option<f64>> {
        let Some(mut ax) = self.base.apply(x) else {
            return Ok(None);
        };
        for pair in self.updates.pairs() {
            let vx = pair.v().transpose_matmul(x)?;
            ax = ax.add(&pair.u().matmul(&vx)?)?;
        }
        let rnorm = ax.sub(b)?.norm_frobenius();
        let bnorm = b.norm_frobenius();
        Ok(Some(if bnorm == 0.0 { rnorm } else { rnorm / bnorm }))
    }
}

/// One-shot solve: builds a solver and applies it to `b`.
pub fn smw_solve(
    base: &BaseSolver,
    updates: &UpdateSet,
    b: &DenseMatrix,
) -> Result<(DenseMatrix, SolveReport)> {
    build_solver(base, updates)?.solve(b)
}

/// The explicit `n x n` inverse of `A + Σ UₖVₖᵀ`, obtained by solving against `Iₙ`.
pub fn smw_inverse(base: &BaseSolver, updates: &UpdateSet) -> Result<DenseMatrix> {
    let solver = build_solver(base, updates)?;
    solver.apply_inverse(&DenseMatrix::identity(base.dim()))
}

/// `(I + Σ UₖVₖᵀ)⁻¹ = I − [U₁ … U_N]·M⁻¹·[V₁ … V_N]ᵀ` with
/// `M[j][k] = δⱼₖ·I + VⱼᵀUₖ`. No base solves are involved.
pub fn corollary_inverse(updates: &UpdateSet) -> Result<DenseMatrix> {
    let stacked = stack_updates(updates)?;
    let m = assemble_blocks(updates, &stacked.b)?;
    let cap = CapacitanceMatrix::from_matrix(m, updates.block_offsets().to_vec())?;
    let x = cap.solve(&stacked.c.transpose());
    DenseMatrix::identity(updates.n()).sub(&stacked.b.matmul(&x)?)
}

/// Solves with all pairs collapsed into one rank-`Σmₖ` update `B·Cᵀ`:
/// `x = A⁻¹b − A⁻¹B·(I + CᵀA⁻¹B)⁻¹·CᵀA⁻¹b`.
pub fn collapsed_solve(
    base: &BaseSolver,
    updates: &UpdateSet,
    b: &DenseMatrix,
) -> Result<DenseMatrix> {
    check_base_dim(base, updates)?;
    check_rhs(base.dim(), b)?;
    let z = base.solve(b)?;
    if updates.is_empty() {
        return Ok(z);
    }
    let stacked = stack_updates(updates)?;
    let y = base.solve(&stacked.b)?;
    let mut m = stacked.c.transpose_matmul(&y)?;
    for i in 0..m.rows() {
        m.set(i, i, 1.0 + m.get(i, i));
    }
    let factors = LuFactors::factor(&m).map_err(singular_capacitance)?;
    let t = factors.solve(&stacked.c.transpose_matmul(&z)?);
    z.sub(&y.matmul(&t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> DenseMatrix {
        DenseMatrix::unit_vector(n, i)
    }

    fn col(v: &[f64]) -> DenseMatrix {
        DenseMatrix::column_vector(v).unwrap()
    }

    #[test]
    fn orthogonal_pair_gives_unit_capacitance() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 1))]).unwrap();
        let cap = assemble_capacitance(&base, &set).unwrap();
        assert_eq!(cap.matrix().as_slice(), &[1.0]);
    }

    #[test]
    fn diagonal_identity_capacitance() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 0)), (e(2, 1), e(2, 1))]).unwrap();
        let cap = assemble_capacitance(&base, &set).unwrap();
        assert_eq!(cap.matrix().as_slice(), &[2.0, 0.0, 0.0, 2.0]);
        assert_eq!(cap.block_offsets(), &[0, 1, 2]);
        assert_eq!(cap.block(1, 1).as_slice(), &[2.0]);
    }

    #[test]
    fn capacitance_requires_updates() {
        let base = BaseSolver::identity(2).unwrap();
        assert_eq!(
            assemble_capacitance(&base, &UpdateSet::empty(2)).unwrap_err(),
            SmwError::EmptyUpdates
        );
    }

    #[test]
    fn base_dimension_must_match() {
        let base = BaseSolver::identity(3).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 1))]).unwrap();
        assert!(matches!(
            assemble_capacitance(&base, &set),
            Err(SmwError::DimensionMismatch(_))
        ));
        assert!(matches!(
            build_solver(&base, &set),
            Err(SmwError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn singular_capacitance_detected() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 0).scale(-1.0))]).unwrap();
        assert!(matches!(
            assemble_capacitance(&base, &set),
            Err(SmwError::SingularCapacitance { .. })
        ));
        assert!(matches!(
            smw_inverse(&base, &set),
            Err(SmwError::SingularCapacitance { .. })
        ));
        assert!(matches!(
            corollary_inverse(&set),
            Err(SmwError::SingularCapacitance { .. })
        ));
        assert!(matches!(
            collapsed_solve(&base, &set, &col(&[1.0, 1.0])),
            Err(SmwError::SingularCapacitance { .. })
        ));
    }

    #[test]
    fn nilpotent_update_solve_and_inverse() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 1))]).unwrap();
        let (x, report) = smw_solve(&base, &set, &col(&[1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 1.0]);
        assert_eq!(report.relative_residual, Some(0.0));
        assert_eq!(report.base_solve_count, 1);
        assert_eq!((report.n, report.pairs, report.total_rank), (2, 1, 1));
        let inv = smw_inverse(&base, &set).unwrap();
        assert_eq!(inv.as_slice(), &[1.0, -1.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_updates_pass_through() {
        let base = BaseSolver::from_diagonal(&[2.0, 4.0]).unwrap();
        let set = UpdateSet::empty(2);
        let solver = build_solver(&base, &set).unwrap();
        assert!(solver.capacitance().is_none());
        let (x, report) = solver.solve(&col(&[2.0, 4.0])).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
        assert_eq!(report.total_rank, 0);
        assert_eq!(
            collapsed_solve(&base, &set, &col(&[2.0, 4.0])).unwrap(),
            x
        );
    }

    #[test]
    fn zero_update_behaves_like_base() {
        let base = BaseSolver::from_diagonal(&[2.0, 4.0]).unwrap();
        let zero = DenseMatrix::zeros(2, 1);
        let set = UpdateSet::new(2, vec![(zero.clone(), zero)]).unwrap();
        let solver = build_solver(&base, &set).unwrap();
        assert_eq!(solver.capacitance().unwrap().matrix().as_slice(), &[1.0]);
        let b = col(&[3.0, -8.0]);
        assert_eq!(solver.apply_inverse(&b).unwrap(), base.solve(&b).unwrap());
    }

    #[test]
    fn rank_one_inverse_on_identity() {
        let base = BaseSolver::identity(3).unwrap();
        let set = UpdateSet::new(3, vec![(e(3, 0), e(3, 0))]).unwrap();
        let expected = DenseMatrix::from_diagonal(&[0.5, 1.0, 1.0]).unwrap();
        assert_eq!(smw_inverse(&base, &set).unwrap(), expected);
        assert_eq!(corollary_inverse(&set).unwrap(), expected);
    }

    #[test]
    fn corollary_two_unit_pairs() {
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 0)), (e(2, 1), e(2, 1))]).unwrap();
        assert_eq!(
            corollary_inverse(&set).unwrap(),
            DenseMatrix::from_diagonal(&[0.5, 0.5]).unwrap()
        );
        assert_eq!(
            corollary_inverse(&UpdateSet::empty(2)).unwrap_err(),
            SmwError::EmptyUpdates
        );
    }

    #[test]
    fn collapsed_two_unit_pairs() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 0)), (e(2, 1), e(2, 1))]).unwrap();
        let x = collapsed_solve(&base, &set, &col(&[1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn rhs_validation() {
        let base = BaseSolver::identity(2).unwrap();
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 1))]).unwrap();
        let solver = build_solver(&base, &set).unwrap();
        assert!(matches!(
            solver.solve(&DenseMatrix::zeros(3, 1)),
            Err(SmwError::DimensionMismatch(_))
        ));
        let bad = DenseMatrix::from_raw(2, 1, vec![1.0, f64::NAN]);
        assert!(matches!(solver.solve(&bad), Err(SmwError::NonFiniteInput(_))));
    }

    #[test]
    fn oracle_base_without_operator_reports_no_residual() {
        let base = BaseSolver::from_oracle(2, |b| Ok(b.clone()));
        let set = UpdateSet::new(2, vec![(e(2, 0), e(2, 1))]).unwrap();
        let (x, report) = smw_solve(&base, &set, &col(&[1.0, 1.0])).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 1.0]);
        assert_eq!(report.relative_residual, None);
    }
}
