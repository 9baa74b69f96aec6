//! Floating scalar abstraction for probabilities, scores and weights.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Scalar type used for every probability, score and synaptic weight.
///
/// Implemented by `f32` and `f64`; all model state that is not a scalar
/// (symbol counts, bit sequences, wiring) stays in integer types, so the
/// choice of scalar only affects query precision.
pub trait Scalar:
    Float + FromPrimitive + AddAssign + SubAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + AddAssign + SubAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Converts an occurrence count into the scalar domain.
pub(crate) fn from_count<F: Scalar>(c: u64) -> F {
    F::from_u64(c).expect("count representable as scalar")
}

pub(crate) fn half<F: Scalar>() -> F {
    F::from_f64(0.5).expect("0.5 representable as scalar")
}
