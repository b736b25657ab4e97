//! Scalar abstraction for the numerical kernels.
//!
//! Everything numeric (tile encodings, tensors, the two network
//! architectures, the optimizer) is generic over [`Scalar`] so the same
//! code runs in `f32` for production and in `f64` for gradient checking.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar usable by the tensor and network code.
pub trait Scalar:
    Float
    + NumAssignOps
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for constants and RNG draws.
    fn from_f64_lossy(x: f64) -> Self;

    /// Widening (or identity) conversion to `f64`.
    fn to_f64_lossy(self) -> f64;

    /// Narrowing (or identity) conversion to `f32`, used by the on-disk
    /// formats which always store 32-bit values.
    fn to_f32_lossy(self) -> f32;

    /// Conversion from an on-disk 32-bit value.
    fn from_f32_lossy(x: f32) -> Self;
}

impl Scalar for f32 {
    #[inline(always)]
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
    #[inline(always)]
    fn to_f32_lossy(self) -> f32 {
        self
    }
    #[inline(always)]
    fn from_f32_lossy(x: f32) -> Self {
        x
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
    #[inline(always)]
    fn to_f64_lossy(self) -> f64 {
        self
    }
    #[inline(always)]
    fn to_f32_lossy(self) -> f32 {
        self as f32
    }
    #[inline(always)]
    fn from_f32_lossy(x: f32) -> Self {
        x as f64
    }
}

/// Shorthand for `Scalar::from_f64_lossy`.
#[inline(always)]
pub fn scl<S: Scalar>(x: f64) -> S {
    S::from_f64_lossy(x)
}
