//! Dense complex linear algebra for Hilbert spaces of dimension ≤ 9 and their
//! Liouville spaces (≤ 81).

mod decomp;
mod eigen;
mod expm;
mod matrix;

pub use decomp::{left_eigenvector, solve, Lu, PivotedQr};
pub use eigen::eigenvalues;
pub use expm::expm;
pub use matrix::{inner, vec_norm, ComplexMatrix};
