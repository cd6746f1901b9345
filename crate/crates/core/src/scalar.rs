//! Scalar abstraction shared by exact (rational) and floating-point structure constants.

use std::fmt::Display;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, NumAssign, One, Signed, ToPrimitive};

/// Field of coefficients for structure constants and exact linear algebra.
///
/// `EXACT` scalars compare against zero exactly; floating-point scalars use
/// an absolute tolerance supplied by the caller.
pub trait Scalar:
    nalgebra::Scalar + Num + NumAssign + Neg<Output = Self> + Signed + Display + Send + Sync
{
    const EXACT: bool;

    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossless for exact targets, rounded for floating ones.
    fn from_rational(r: &BigRational) -> Self;

    /// Zero for exact scalars, `|x| <= tol` otherwise.
    fn negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64().abs() <= tol
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r)
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn from_i64(v: i64) -> Self {
        v as f32
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn from_rational(r: &BigRational) -> Self {
        rational_to_f64(r) as f32
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // huge numerators/denominators: fall back to the library conversion
        _ => ToPrimitive::to_f64(r).unwrap_or(f64::NAN),
    }
}

/// Parse `"p/q"` or `"p"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let r: BigRational = s.parse().ok()?;
    Some(r)
}

/// Render an exact rational as `"p/q"` (or `"p"` for integers).
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub(crate) fn max_abs<T: Scalar>(values: impl IntoIterator<Item = T>) -> f64 {
    values
        .into_iter()
        .map(|v| v.to_f64().abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip_through_strings() {
        let r = parse_rational("-6/4").unwrap();
        assert_eq!(format_rational(&r), "-3/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
    }

    #[test]
    fn negligible_is_exact_for_rationals() {
        let tiny = BigRational::from_ratio(1, 1_000_000_000_000);
        assert!(!tiny.negligible(1.0));
        assert!(1e-13f64.negligible(1e-12));
    }
}
