//! Scalar abstraction for the numeric core.
//!
//! All of the optimization machinery is written against [`Real`], so the same
//! code runs with `f32` or `f64`. Concrete type aliases live at the crate
//! root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by every module in this crate.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

/// Shorthand for lifting an `f64` constant into the working scalar type.
#[inline]
pub fn real<T: Real>(v: f64) -> T {
    T::from_f64(v).expect("constant not representable in scalar type")
}

/// Default threshold below which a rule violation counts as satisfied.
#[inline]
pub fn default_eps_rank<T: Real>() -> T {
    real(1e-9)
}

/// Euclidean norm of a slice.
#[inline]
pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&e| e * e).sum::<T>().sqrt()
}

/// Euclidean distance between two slices of equal length.
#[inline]
pub fn distance<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}
