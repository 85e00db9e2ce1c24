//! Exact rational helpers shared by the polytope and feasibility code.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact binary value of a finite float.
pub fn from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::Domain(format!("non-finite value {v}")))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `p/q`, an integer, or a plain decimal such as `-0.125` or `2.5e-3`
/// into an exact rational.
pub fn parse(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Validation(format!("cannot parse {text:?} as a rational"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Validation(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let joined = format!("{whole}{frac}");
    let numer: BigInt = if joined.is_empty() { BigInt::zero() } else { joined.parse().map_err(|_| bad())? };
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(numer);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Always renders as `p/q`, integers included.
pub fn format_pq(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

pub fn in_signed_unit(r: &Rational) -> bool {
    r.abs() <= Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse("1/4").unwrap(), ratio(1, 4));
        assert_eq!(parse(" -3/6 ").unwrap(), ratio(-1, 2));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse("1").unwrap(), int(1));
        assert_eq!(parse("2.5e-1").unwrap(), ratio(1, 4));
        assert_eq!(parse("1E2").unwrap(), int(100));
        assert_eq!(parse("0.1").unwrap(), ratio(1, 10));
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "abc", "1/0", "1..2", "-", "1/x", "0x10"] {
            assert!(parse(s).is_err(), "{s}");
        }
    }

    #[test]
    fn float_conversion_is_verbatim() {
        assert_eq!(from_f64(0.5).unwrap(), ratio(1, 2));
        assert_ne!(from_f64(0.1).unwrap(), ratio(1, 10));
        assert!(from_f64(f64::NAN).is_err());
    }

    #[test]
    fn pq_format() {
        assert_eq!(format_pq(&int(-1)), "-1/1");
        assert_eq!(format_pq(&ratio(2, 4)), "1/2");
    }
}
