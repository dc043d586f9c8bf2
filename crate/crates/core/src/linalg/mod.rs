//! Sparse storage, normal-equation assembly and the linear solvers.

mod cg;
mod cholesky;
mod givens;
mod sparse;

pub use cg::{cg_solve, SolveMethod, SolveReport};
pub use cholesky::{dense_factor_solve, CholeskyFactor, DEFAULT_DENSE_CAP};
pub use givens::{factor_rows, BandedQr, SparseRow};
pub use sparse::{assemble_normal, LeastSquaresTerm, SparseMatrix};
