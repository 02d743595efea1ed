//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Cubic smoothstep on `[0, 1]`, clamped outside.
#[inline]
pub fn smoothstep<T: Real>(u: T) -> T {
    if u <= T::zero() {
        T::zero()
    } else if u >= T::one() {
        T::one()
    } else {
        u * u * (T::lit(3.0) - T::lit(2.0) * u)
    }
}

/// Derivative of [`smoothstep`] with respect to `u`.
#[inline]
pub fn smoothstep_derivative<T: Real>(u: T) -> T {
    if u <= T::zero() || u >= T::one() {
        T::zero()
    } else {
        T::lit(6.0) * u * (T::one() - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_is_antisymmetric_about_midpoint() {
        for i in 0..=20 {
            let u = i as f64 / 20.0;
            assert!((smoothstep(u) + smoothstep(1.0 - u) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn smoothstep_derivative_matches_difference_quotient() {
        let h = 1e-6;
        for u in [0.1, 0.3, 0.5, 0.77] {
            let fd = (smoothstep(u + h) - smoothstep(u - h)) / (2.0 * h);
            assert!((fd - smoothstep_derivative(u)).abs() < 1e-8);
        }
    }
}
