use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::FromPrimitive;

/// Real scalar used throughout the numerical core (`f32` or `f64`).
///
/// Tolerances scale with the precision of the type: the `f64` values are the
/// canonical 1e-12 (structural identities) and 1e-10 (physics comparisons).
pub trait Real: RealField + Copy + FromPrimitive + Default + Debug + Display + Sum + Send + Sync {
    /// Tolerance for exact algebraic identities (round trips, basis relations).
    fn structural_tol() -> Self;
    /// Tolerance for comparisons between independent physics code paths.
    fn physics_tol() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion to `f64`.
    #[inline]
    fn to_f64(self) -> f64 {
        nalgebra::try_convert(self).unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn structural_tol() -> Self {
        1e-12
    }
    fn physics_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn structural_tol() -> Self {
        2e-5
    }
    fn physics_tol() -> Self {
        1e-4
    }
}

/// Complex scalar over `T`.
pub type C<T> = Complex<T>;

#[inline]
pub(crate) fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn cr<T: Real>(re: f64) -> C<T> {
    Complex::new(T::lit(re), T::zero())
}

#[inline]
pub(crate) fn ci<T: Real>(im: f64) -> C<T> {
    Complex::new(T::zero(), T::lit(im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25).to_f64(), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25).to_f64(), 0.25);
    }

    #[test]
    fn tolerances_ordered() {
        assert!(f64::structural_tol() < f64::physics_tol());
        assert!(f32::structural_tol() < f32::physics_tol());
    }
}
