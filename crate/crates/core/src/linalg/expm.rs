use super::matrix::ComplexMatrix;
use crate::scalar::{Cplx, Real};

const TAYLOR_TERMS: usize = 20;

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Intended for the small, well-conditioned generators used here (3×3 spin
/// rotations); accuracy is close to machine precision for `‖A‖ ≲ 10³`.
pub fn expm<T: Real>(a: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let n = a.dim();
    let norm = a.frobenius_norm();
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > T::lit(0.5) {
        scale = scale * T::lit(0.5);
        squarings += 1;
    }
    let scaled = a.scale(Cplx::new(scale, T::zero()));
    let mut result = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=TAYLOR_TERMS {
        term = (&term * &scaled).scale_real(T::one() / T::from_usize(k).unwrap());
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}
