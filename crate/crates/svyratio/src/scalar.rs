//! Floating-point scalar abstraction: the whole toolkit is generic over
//! `f32`/`f64` through this trait.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type the estimation routines are generic over (`f32` or `f64`).
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + 'static
{
    /// Lossless-in-practice conversion from a count (population and sample
    /// sizes stay far below the integer range of either float type).
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as scalar")
    }

    /// Conversion from an `f64` constant (tolerances, configuration values).
    fn from_config(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 representable as scalar")
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + 'static
{
}
