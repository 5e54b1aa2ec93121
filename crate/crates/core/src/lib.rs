//! Inverses and solves for matrices of the form `A + Σₖ Uₖ Vₖᵀ`.
//!
//! `A` is factored (or otherwise made solvable) once and wrapped in a
//! [`BaseSolver`]. The `N` low-rank pairs live in an [`UpdateSet`]. The
//! blocked Sherman–Morrison–Woodbury identity then reduces every solve with
//! the updated matrix to base solves plus one small dense solve with the
//! capacitance matrix of order `Σ mₖ`.
//!
//! ```
//! use smw_core::{build_solver, BaseSolver, DenseMatrix, UpdateSet};
//!
//! // A = I₂, one update e₁·e₂ᵀ, so the total matrix is [[1, 1], [0, 1]].
//! let base = BaseSolver::identity(2).unwrap();
//! let updates = UpdateSet::new(
//!     2,
//!     vec![(DenseMatrix::unit_vector(2, 0), DenseMatrix::unit_vector(2, 1))],
//! )
//! .unwrap();
//! let solver = build_solver(&base, &updates).unwrap();
//! let b = DenseMatrix::column_vector(&[1.0, 1.0]).unwrap();
//! let (x, report) = solver.solve(&b).unwrap();
//! assert_eq!(x.as_slice(), &[0.0, 1.0]);
//! assert_eq!(report.relative_residual, Some(0.0));
//! ```
//!
//! The [`reference`] module materializes the total matrix and solves it
//! directly; it shares no solve code with the update path and exists to
//! check it.

pub mod base;
pub mod error;
pub mod fixtures;
pub mod lu;
pub mod matrix;
pub mod reference;
pub mod smw;
pub mod updates;

pub use base::{BaseKind, BaseSolver};
pub use error::{Result, SmwError};
pub use matrix::DenseMatrix;
pub use smw::{
    assemble_capacitance, build_solver, collapsed_solve, corollary_inverse, smw_inverse,
    smw_solve, CapacitanceMatrix, SmwSolver, SolveReport,
};
pub use updates::{stack_updates, StackedPair, UpdatePair, UpdateSet};
