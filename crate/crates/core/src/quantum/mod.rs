//! Operator algebra for single oscillators (dimension 3), oscillator pairs
//! (dimension 9) and their Liouville spaces.

mod density;
mod operators;
mod superop;

pub use density::DensityMatrix;
#[cfg(test)]
pub(crate) use density::min_eigenvalue;
pub use operators::{dissipator, expectation, ket_bra, spin1_operators, tensor, SpinOperators, LEVELS};
pub use superop::{
    devectorize, kernel_dimension, liouvillian, steady_state_nullspace, vectorize, Superoperator,
};
