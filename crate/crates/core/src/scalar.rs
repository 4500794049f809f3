//! Scalar abstraction shared by every numeric container in the crate.
//!
//! The sampler and the solvers are written once against [`Real`]; `f64` is the
//! working precision of the command-line tool, `f32` is supported for
//! memory-constrained runs. Quantities that need more precision than the
//! scalar offers (special functions, log-likelihood accumulation) are computed
//! in `f64` and converted at the boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Absolute tolerance for "this row sums to one".
    const SIMPLEX_TOL: f64;

    /// Smallest value a sampled probability is allowed to take on its support.
    fn tiny() -> Self {
        Self::min_positive_value()
    }

    fn of(x: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const SIMPLEX_TOL: f64 = 1e-9;

    #[inline]
    fn of(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const SIMPLEX_TOL: f64 = 1e-4;

    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}
