//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts a small integer into the scalar type.
    #[inline]
    fn int(n: i64) -> Self {
        Self::from_i64(n).expect("integer representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `sign(x)·|x|^e`, with `0` mapped to `0`.
    #[inline]
    fn signed_pow(self, e: Self) -> Self {
        if self == Self::zero() {
            Self::zero()
        } else {
            let m = (e * self.abs().ln()).exp();
            if self < Self::zero() {
                -m
            } else {
                m
            }
        }
    }

    /// `|x|^e` with `0` mapped to `0` for positive exponents.
    #[inline]
    fn abs_pow(self, e: Self) -> Self {
        if self == Self::zero() {
            Self::zero()
        } else {
            (e * self.abs().ln()).exp()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_pow_is_odd() {
        let a = 1.7_f64.signed_pow(3.5);
        let b = (-1.7_f64).signed_pow(3.5);
        assert_eq!(a, -b);
        assert_eq!(0.0_f64.signed_pow(7.0), 0.0);
        assert!((2.0_f64.signed_pow(3.0) - 8.0).abs() < 1e-14);
    }

    #[test]
    fn works_in_single_precision() {
        let x: f32 = Real::lit(0.5);
        assert!((x.signed_pow(2.0) - 0.25).abs() < 1e-6);
    }
}
