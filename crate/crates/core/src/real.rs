use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar for the real-valued parts of the toolkit.
///
/// Implemented for `f32` and `f64`. Everything that manipulates probabilities,
/// quantiles, or transformed matrices is generic over this trait; the `f64`
/// aliases at the crate root are the usual entry points.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossless-enough constant conversion; panics only on NaN input, which
    /// never occurs for the literals used in this crate.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("constant not representable")
    }

    /// Conversion to `f64` for reporting and serialization of summaries.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
