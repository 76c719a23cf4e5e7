//! Scalar abstractions: exact coefficients for the symbolic layer and
//! floating-point numbers for the numeric layer.

use std::fmt;
use std::hash::Hash;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// An exact field scalar usable as a symbolic coefficient.
///
/// The `Eq + Ord + Hash` bounds rule out floating-point types on purpose:
/// constraint classification relies on exact zero tests. The canonical
/// instantiation is [`crate::Rat`] (arbitrary-precision rationals); fixed-width
/// rationals such as `num_rational::Rational64` also satisfy the bounds.
pub trait Scalar:
    Num
    + Signed
    + Clone
    + Eq
    + Ord
    + Hash
    + fmt::Debug
    + fmt::Display
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Embeds a small integer.
    fn int(v: i64) -> Self {
        Self::from_i64(v).expect("integer embeds into scalar")
    }

    /// Builds the fraction `n/d`. Panics if `d` is zero.
    fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Self::int(n) / Self::int(d)
    }

    /// Parses a base-10 integer literal of arbitrary length.
    fn from_integer_literal(digits: &str) -> Option<Self> {
        // Ratio types only accept the `n/d` shape here, so retry with a unit
        // denominator when the bare form is rejected.
        Self::from_str_radix(digits, 10)
            .or_else(|_| Self::from_str_radix(&format!("{digits}/1"), 10))
            .ok()
    }
}

impl<T> Scalar for T where
    T: Num
        + Signed
        + Clone
        + Eq
        + Ord
        + Hash
        + fmt::Debug
        + fmt::Display
        + FromPrimitive
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// A floating-point scalar for numerical evaluation and integration.
pub trait Real: Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Converts an exact scalar, rounding to the nearest representable value.
    fn from_scalar<S: Scalar>(s: &S) -> Self {
        Self::from_f64(s.to_f64().expect("scalar convertible to f64"))
            .expect("f64 convertible to real")
    }
}

impl<T> Real for T where T: Float + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{}
