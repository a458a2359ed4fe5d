//! Floating point abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Scalar type used by scoring, agreement and similarity computations.
///
/// Implemented for `f32` and `f64`; the crate root exposes `f64` aliases.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// `num / den` computed in this scalar type. Returns zero when `den == 0`.
    fn ratio(num: usize, den: usize) -> Self {
        if den == 0 {
            return Self::zero();
        }
        Self::from_usize(num).unwrap() / Self::from_usize(den).unwrap()
    }

    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).unwrap()
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}
