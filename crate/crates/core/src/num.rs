//! Scalar abstraction used throughout the library.
//!
//! All geometry, registration, and reconstruction code is generic over a
//! floating point scalar so the same routines run in `f32` or `f64`. The
//! crate root exposes `f64` type aliases for the common case.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point scalar with the operations the library relies on.
///
/// Implemented for `f32` and `f64` via the blanket impl below; any type that
/// satisfies the listed `num_traits` bounds gets it for free.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Default
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Convert from `f64`, accepting the precision loss for narrower types.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real scalar")
    }

    /// Convert to `f64`, widening losslessly for `f32`/`f64`.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real scalar converts to f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssignOps
        + Default
        + std::fmt::Debug
        + std::fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for `T::of(v)`; reads better in formula-heavy code.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::of(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converts_both_scalar_widths() {
        assert_eq!(f64::of(1.5), 1.5);
        assert_eq!(f32::of(1.5), 1.5f32);
        assert_eq!(real::<f32>(0.25), 0.25f32);
        assert_eq!(2.5f32.to_f64_lossy(), 2.5);
    }

    #[test]
    fn generic_code_compiles_for_both() {
        fn mean<T: Real>(values: &[T]) -> T {
            let mut sum = T::zero();
            for &v in values {
                sum += v;
            }
            sum / T::of(values.len() as f64)
        }
        assert_eq!(mean(&[1.0f64, 2.0, 3.0]), 2.0);
        assert_eq!(mean(&[1.0f32, 2.0, 3.0]), 2.0f32);
    }
}
