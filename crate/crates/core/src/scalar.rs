//! Floating-point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the solvers are generic over: `f32` or `f64`.
///
/// Besides the `num-traits` float surface this carries the error function,
/// which the normal law needs and `num-traits` does not provide.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + Serialize + DeserializeOwned + 'static
{
    fn erf(self) -> Self;
    fn erfc(self) -> Self;

    /// Smallest relative tolerance an iterative routine can sensibly ask for.
    fn tolerance_floor() -> Self {
        Self::epsilon() * lit(64.0)
    }
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        libm::erf(self)
    }
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        libm::erff(self)
    }
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Converts an `f64` literal into the working scalar.
#[inline(always)]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable")
}

/// Converts a count into the working scalar.
#[inline(always)]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable")
}

/// `max(x, 0)`.
#[inline]
pub fn pos<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Scalar>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / count(n - 1);
            let mut v: Vec<T> = (0..n).map(|i| lo + step * count(i)).collect();
            v[n - 1] = hi;
            v
        }
    }
}
