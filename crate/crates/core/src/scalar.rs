//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the kinematic model is evaluated in: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Error function.
    fn erf(self) -> Self;
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
}

/// Converts an `f64` literal into `S`.
#[inline]
pub fn lit<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 literal representable in scalar type")
}

/// Converts `S` into `f64`.
#[inline]
pub fn to_f64<S: Scalar>(v: S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Converts a count into `S`.
#[inline]
pub fn from_usize<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("count representable in scalar type")
}

/// Reduces an angle difference to (-pi, pi].
pub fn wrap_angle<S: Scalar>(a: S) -> S {
    let two_pi = S::TAU();
    let mut r = a % two_pi;
    if r <= -S::PI() {
        r += two_pi;
    } else if r > S::PI() {
        r -= two_pi;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        let pi = std::f64::consts::PI;
        assert_eq!(wrap_angle(pi), pi);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(3.0 * pi / 2.0) + pi / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25f64) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn erf_both_widths() {
        assert!((Scalar::erf(0.5f64) - 0.520_499_877_813_046_5).abs() < 1e-15);
        assert!((Scalar::erf(0.5f32) - 0.520_499_9).abs() < 1e-6);
    }
}
