//! Floating-point scalar abstraction.
//!
//! Everything in this crate is generic over [`Real`], which is implemented
//! for `f32` and `f64`. Concrete aliases for the main types live at the
//! crate root. All published tolerances assume `f64`; the `f32`
//! instantiation exists for cheap exploratory sweeps.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar the simulator is generic over: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Lossy conversion of an `f64` literal (constants, tolerances) into `T`.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal must convert into the scalar type")
}
