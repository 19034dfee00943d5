//! Scalar abstraction shared by every geometric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the geometry kernels are written against: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Condition-number estimate above which a 3x3 quadric block counts as singular.
    const CONDITION_LIMIT: Self;
    /// Triangles with area at or below this are treated as degenerate.
    const DEGENERATE_AREA: Self;

    /// Converts an `f64` literal. Every finite `f64` maps to some value of `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in float range")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }
}

impl Real for f64 {
    const CONDITION_LIMIT: Self = 1e12;
    const DEGENERATE_AREA: Self = 1e-12;
}

impl Real for f32 {
    const CONDITION_LIMIT: Self = 1e6;
    const DEGENERATE_AREA: Self = 1e-12;
}
