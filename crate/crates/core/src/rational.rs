//! Exact rational numbers.
//!
//! All coefficients and constants are arbitrary-precision rationals kept in
//! canonical form (positive denominator, reduced by the gcd).

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `123`, `-4`, `1.25` or `11/10` into an exact rational.
///
/// Decimal fractions convert exactly: `1.1` is `11/10`.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let value = if let Some((num, den)) = body.split_once('/') {
        let n = parse_digits(num)?;
        let d = parse_digits(den)?;
        if d.is_zero() {
            return None;
        }
        Rational::new(n, d)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if whole.is_empty() || frac.is_empty() {
            return None;
        }
        let w = parse_digits(whole)?;
        let f = parse_digits(frac)?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        Rational::new(w * &scale + f, scale)
    } else {
        Rational::from_integer(parse_digits(body)?)
    };
    Some(if neg { -value } else { value })
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical text: `5`, `-5`, `11/10`, `-17/11`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
