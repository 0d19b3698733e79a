//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Default + Display + Debug + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// An absolute tolerance of `base` (stated for `f64`), widened for
    /// lower-precision scalars so that it stays above round-off.
    #[inline]
    fn tol(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(1e5);
        Self::lit(base).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = num_complex::Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> Cplx<T> {
    Cplx::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Cplx<T> {
    Cplx::new(x, T::zero())
}

/// `x` reduced to `[0, 2π)`.
pub fn wrap_angle<T: Real>(x: T) -> T {
    let w = x - T::TAU() * (x / T::TAU()).floor();
    if w >= T::TAU() {
        T::zero()
    } else {
        w
    }
}

/// `f64` shorthand for tests.
#[cfg(test)]
pub(crate) fn c64(re: f64, im: f64) -> Cplx<f64> {
    Cplx::new(re, im)
}
