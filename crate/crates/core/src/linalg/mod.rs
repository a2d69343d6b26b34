//! Dense, sparse and eigen-solver building blocks.

mod dense;
pub mod eigen;
mod mat2;
pub mod sparse;

pub use dense::{Cholesky, DenseMatrix, Lu};
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use mat2::Mat2;
pub use sparse::{CsrMatrix, SparseSolver};
