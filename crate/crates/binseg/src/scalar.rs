//! The scalar abstraction the whole crate is generic over.

use std::fmt::Display;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;

/// Floating-point scalar for grids and the solver: `f32` or `f64`.
///
/// The bound collects everything the numerics need: IEEE float operations
/// (`Float`), mathematical constants (`FloatConst`), conversions from
/// primitive values (`FromPrimitive`), eligibility for the FFT backend
/// (`FftNum`), and text formatting for the file writers (`Display`).
pub trait Scalar: Float + FloatConst + FromPrimitive + FftNum + Display {}

impl<T> Scalar for T where T: Float + FloatConst + FromPrimitive + FftNum + Display {}

/// Converts an `f64` constant into the active scalar type.
pub(crate) fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("constant must be representable in the scalar type")
}
