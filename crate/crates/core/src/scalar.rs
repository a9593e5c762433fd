//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All coefficients are complex numbers over a real floating-point type
//! `T`. The crate is exercised with `f64`; `f32` is supported for the
//! same algorithms at correspondingly looser tolerances.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Real floating-point type underlying the complex coefficients.
pub trait Real:
    Float + FromPrimitive + NumAssign + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in the scalar type")
    }

    /// Relative threshold below which coefficients count as spurious fill-in.
    ///
    /// This is `1e-14` for `f64`; narrower types use a few ulps instead.
    fn drop_threshold() -> Self {
        Self::lit(1e-14).max(Self::epsilon() * Self::lit(8.0))
    }

    /// Smallest determinant modulus accepted for an invertible linear part.
    fn singular_threshold() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(16.0))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex coefficient over the real type `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn czero<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::zero())
}

#[inline]
pub(crate) fn cone<T: Real>() -> C<T> {
    Complex::new(T::one(), T::zero())
}

#[inline]
pub(crate) fn creal<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn is_zero<T: Real>(z: &C<T>) -> bool {
    z.re == T::zero() && z.im == T::zero()
}
