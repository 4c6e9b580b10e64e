//! Closed intervals over `f64` and over exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Closed interval `[lo, hi]` with `f64` endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    /// `[center - radius, center + radius]`, rounded outward by one ulp when
    /// the radius is nonzero.
    pub fn around(center: f64, radius: f64) -> Self {
        if radius == 0.0 {
            return Self::point(center);
        }
        Self {
            lo: next_down(center - radius),
            hi: next_up(center + radius),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn disjoint(&self, other: &Interval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    /// Upper bound on `|x - y|` over `x` in `self`, `y` in `other`.
    pub fn max_distance(&self, other: &Interval) -> f64 {
        next_up((self.hi - other.lo).abs().max((other.hi - self.lo).abs()))
    }

    pub fn to_rational(&self) -> RationalInterval {
        RationalInterval {
            lo: rational_from_f64(self.lo),
            hi: rational_from_f64(self.hi),
        }
    }
}

pub(crate) fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let b = x.to_bits();
    f64::from_bits(if x > 0.0 { b + 1 } else { b - 1 })
}

pub(crate) fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// Exact rational value of a finite `f64`.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// `2^-k` as an exact rational.
pub fn pow2_neg(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

/// Closed interval with exact rational endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RationalInterval {
    pub fn point(x: BigRational) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn around(center: &BigRational, radius: &BigRational) -> Self {
        Self {
            lo: center - radius,
            hi: center + radius,
        }
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    /// `sum_i a_i * self_i` in exact interval arithmetic.
    pub fn linear_combination(coeffs: &[BigInt], values: &[RationalInterval]) -> RationalInterval {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (a, v) in coeffs.iter().zip(values) {
            if a.is_zero() {
                continue;
            }
            let ar = BigRational::from_integer(a.clone());
            if a.is_positive() {
                lo += &ar * &v.lo;
                hi += &ar * &v.hi;
            } else {
                lo += &ar * &v.hi;
                hi += &ar * &v.lo;
            }
        }
        RationalInterval { lo, hi }
    }

    /// Largest absolute value attained on the interval.
    pub fn magnitude(&self) -> BigRational {
        let a = self.lo.abs();
        let b = self.hi.abs();
        if a > b {
            a
        } else {
            b
        }
    }

    /// Smallest absolute value attained on the interval (0 when it straddles 0).
    pub fn mignitude(&self) -> BigRational {
        if self.lo.is_positive() {
            self.lo.clone()
        } else if self.hi.is_negative() {
            -self.hi.clone()
        } else {
            BigRational::zero()
        }
    }
}
