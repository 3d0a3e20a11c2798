//! Integer cost scalar used throughout the search core.
//!
//! All costs are exact integers in doubled ("scaled") units, so the engine is
//! generic over the signed integer width. `i64` is the default; `i32` halves
//! the footprint of search records when the instance is small enough.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_traits::{FromPrimitive, PrimInt, Signed, ToPrimitive};

/// Signed integer type that can carry scaled alignment costs.
pub trait Cost:
    PrimInt
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Hash
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Sentinel for "not reached yet". Leaves headroom so that adding a
    /// transition cost to it never wraps.
    fn unreached() -> Self {
        Self::max_value() / (Self::one() + Self::one() + Self::one() + Self::one())
    }

    /// Lossless conversion from an `i64` literal; panics on overflow, which
    /// problem construction rules out beforehand.
    fn of(v: i64) -> Self {
        Self::from_i64(v).expect("cost literal out of range for scalar type")
    }

    fn as_i64(self) -> i64 {
        self.to_i64().expect("cost does not fit in i64")
    }
}

impl<T> Cost for T where
    T: PrimInt
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Hash
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Binomial coefficient C(n, r), zero when `r > n`.
pub fn binomial(n: usize, r: usize) -> u64 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u64 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}
