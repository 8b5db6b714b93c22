//! Scalar abstraction shared by the exact and floating-point code paths.
//!
//! Structure constants and Baker-Campbell-Hausdorff coefficients are always
//! stored as exact rationals; vectors, group points and polynomials are
//! generic over a [`Scalar`] so the same formulas run either exactly (for
//! algebraic verdicts) or in `f64` (for integrators and probes).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};
use std::fmt::{Debug, Display};

/// Exact rational scalar used for all algebraic decision procedures.
pub type Rat = BigRational;

/// Coefficient field for vectors, covectors and group coordinates.
pub trait Scalar: Num + Signed + Clone + Debug + Display + PartialEq + 'static {
    fn from_ratio(r: &Rat) -> Self;
    fn from_int(n: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// True exactly for the zero element (no float tolerance).
    fn is_exactly_zero(&self) -> bool {
        *self == Self::zero()
    }
}

impl Scalar for Rat {
    fn from_ratio(r: &Rat) -> Self {
        r.clone()
    }
    fn from_int(n: i64) -> Self {
        Rat::from_integer(BigInt::from(n))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn from_ratio(r: &Rat) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_int(n: i64) -> Self {
        n as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Rational from small integers, for tests and tables.
pub fn ratio(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Parse a scalar written as `p/q`, an integer, or a float literal; float
/// input converts to its exact binary value.
pub fn parse_rat(s: &str) -> Option<Rat> {
    use std::str::FromStr;
    if let Ok(r) = Rat::from_str(s.trim()) {
        return Some(r);
    }
    s.trim().parse::<f64>().ok().and_then(Rat::from_float)
}
