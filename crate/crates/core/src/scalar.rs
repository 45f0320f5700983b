//! Scalar abstraction shared by every signal-processing routine.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating-point sample type: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Default + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts a count or index into `Self`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle onto `(-pi, pi]`.
pub fn wrap_to_pi<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let mut y = x % two_pi;
    if y > T::PI() {
        y = y - two_pi;
    } else if y <= -T::PI() {
        y = y + two_pi;
    }
    y
}

/// Wraps an angle onto `[0, 2pi)`.
pub fn wrap_to_two_pi<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let y = x % two_pi;
    let y = if y < T::zero() { y + two_pi } else { y };
    // `y + two_pi` can round up to exactly 2pi for tiny negative inputs.
    if y >= two_pi {
        T::zero()
    } else {
        y
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_pi_range() {
        assert!((wrap_to_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_to_pi(-3.0 * PI / 2.0) - PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_to_pi(PI), PI);
        assert!((wrap_to_pi(-PI) - PI).abs() < 1e-12);
    }

    #[test]
    fn wrap_two_pi_range() {
        assert!((wrap_to_two_pi(-PI / 2.0) - 3.0 * PI / 2.0).abs() < 1e-12);
        assert!(wrap_to_two_pi(2.0 * PI).abs() < 1e-12);
        assert!(wrap_to_two_pi(-1e-20_f64) < 2.0 * PI);
    }

    #[test]
    fn db_roundtrip() {
        assert!((linear_to_db(db_to_linear(6.0)) - 6.0).abs() < 1e-12);
        assert!((db_to_linear(10.0) - 10.0).abs() < 1e-12);
    }
}
