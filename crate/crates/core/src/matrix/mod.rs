//! Basis-tagged complex matrices and the linear-algebra kernels built on them.

mod basis;
mod complex_matrix;
mod eigen;
mod entropy;
pub mod kernels;

pub use basis::{BasisAxis, BasisKind};
pub(crate) use complex_matrix::unit_phase;
pub use complex_matrix::{ComplexMatrix, DEFAULT_EPS_REL};
pub use eigen::{herm_eig, EigenDecomposition, HERMITIAN_TOL};
pub use entropy::shannon_entropy;
