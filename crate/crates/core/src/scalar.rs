//! Scalar abstraction for the measure-level numerics.
//!
//! Measures, spectra and the dimension estimators are written once over
//! [`Scalar`] and instantiated for `f32` and `f64`. Path samples stay `f64`
//! because the snapshot format is bit-exact on 64-bit floats, and the
//! diophantine and lattice code works over exact rationals.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by measures, spectra and geometry.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only for non-representable input
    /// (never the case for `f32`/`f64`).
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Pairwise (cascade) summation; the reduction order depends only on the
/// input length, so parallel producers that collect into a `Vec` first get
/// reproducible sums.
pub fn pairwise_sum<S: Scalar>(xs: &[S]) -> S {
    const BLOCK: usize = 32;
    if xs.len() <= BLOCK {
        let mut acc = S::zero();
        for &x in xs {
            acc = acc + x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
