//! Scalar fields the Lie-algebra layer is generic over.
//!
//! `f64` drives all the numerical work. [`Exact`] (arbitrary-precision
//! rationals) is used where a parameter has rational square roots, so that
//! closed-form identities can be checked with a zero remainder instead of a
//! tolerance.

use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, NumAssign, ToPrimitive};

/// Exact rational scalar.
pub type Exact = BigRational;

pub trait Scalar:
    Clone + Debug + PartialEq + Send + Sync + 'static + Num + NumAssign + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;

    /// Lossy conversion used for pivoting and residual reporting.
    fn to_f64(&self) -> f64;

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `p / q` as an exact rational.
pub fn ratio(p: i64, q: i64) -> Exact {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact square root of a non-negative rational, if it is itself rational.
pub fn exact_sqrt(x: &Exact) -> Option<Exact> {
    use num_traits::Signed;
    if x.is_negative() {
        return None;
    }
    let num = x.numer().sqrt();
    let den = x.denom().sqrt();
    if &(&num * &num) == x.numer() && &(&den * &den) == x.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

/// Parses a decimal (`0.36`) or fraction (`9/25`) literal into an exact rational.
pub fn parse_exact(s: &str) -> Option<Exact> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = digits.parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    let value = BigRational::new(numer, denom);
    Some(if neg { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(parse_exact("0.36"), Some(ratio(9, 25)));
        assert_eq!(parse_exact("9/25"), Some(ratio(9, 25)));
        assert_eq!(parse_exact("1"), Some(ratio(1, 1)));
        assert_eq!(parse_exact(".5"), Some(ratio(1, 2)));
        assert_eq!(parse_exact("abc"), None);
        assert_eq!(parse_exact("1/0"), None);
    }

    #[test]
    fn rational_square_roots() {
        assert_eq!(exact_sqrt(&ratio(9, 25)), Some(ratio(3, 5)));
        assert_eq!(exact_sqrt(&ratio(16, 25)), Some(ratio(4, 5)));
        assert_eq!(exact_sqrt(&ratio(1, 2)), None);
        assert_eq!(exact_sqrt(&ratio(0, 1)), Some(ratio(0, 1)));
    }
}
