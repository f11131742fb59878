//! Floating-point scalar abstraction: f32 or f64.

use std::fmt;
use std::iter::Sum;

use num_traits::Float;

/// Scalar type underlying tensors, norms, and audits.
pub trait Scalar: Float + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + Sum<Self> + fmt::Debug + fmt::Display + Send + Sync + 'static {}

/// Converts an f64 constant (tolerances, sampled values) into the working
/// scalar type.
pub(crate) fn cast<F: Scalar>(x: f64) -> F {
    F::from(x).expect("f64 representable in scalar type")
}

/// Widens a scalar to f64 for reporting.
pub(crate) fn to_f64<F: Scalar>(x: F) -> f64 {
    x.to_f64().expect("scalar representable as f64")
}
