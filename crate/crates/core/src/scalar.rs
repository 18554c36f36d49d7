//! Floating-point element type shared by every tensor, network and metric.
//!
//! Training runs in `f32` for speed; gradient checks and oracles run in
//! `f64`. Everything above this module is written once against [`Scalar`].

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Mantissa+exponent width, reported in checkpoints and CLI output.
    const BITS: u32;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in every scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar converts to f64")
    }
}

macro_rules! impl_scalar {
    ($t:ty, $bits:expr) => {
        impl Scalar for $t {
            const BITS: u32 = $bits;
        }
    };
}

impl_scalar!(f32, 32);
impl_scalar!(f64, 64);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f32::lit(0.5).as_f64(), 0.5);
        assert_eq!(<f64 as Scalar>::BITS, 64);
    }
}
