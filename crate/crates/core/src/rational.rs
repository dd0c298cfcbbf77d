//! Arbitrary-precision rationals and their text format.
//!
//! Rationals serialize as `"num/den"` strings (always with a denominator, so
//! `1` is written `"1/1"`). Parsing additionally accepts plain integers and
//! finite decimals such as `0.125`, which are converted exactly.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Always reduced, denominator positive.
pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn parse_rational(input: &str) -> Result<Rational> {
    let s = input.trim();
    let fail = |reason: &str| Error::ParseRational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(fail("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| fail("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !whole_digits.chars().all(|c| c.is_ascii_digit())
            || (whole_digits.is_empty() && frac.is_empty())
        {
            return Err(fail("bad decimal"));
        }
        let digits = format!("{whole_digits}{frac}");
        let mag: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| fail("bad decimal"))?
        };
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        let value = Rational::new(mag, den);
        return Ok(if negative { -value } else { value });
    }
    let n: BigInt = s.parse().map_err(|_| fail("not a rational"))?;
    Ok(Rational::from_integer(n))
}

/// Exact binary value of a finite float.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::arg(format!("non-finite float {x}")))
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

/// Nearest-ish float; relative error below 2^-52 even for huge operands.
pub fn to_f64(r: &Rational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let shift = 66i64 - (num.bits() as i64 - den.bits() as i64);
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        num / (den << (-shift) as usize)
    };
    let mantissa = q.to_f64().unwrap_or(f64::INFINITY);
    sign * ldexp(mantissa, -shift)
}

/// `log2` of a positive big integer, accurate to about 1e-15 absolute.
pub fn log2_biguint(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "log2 of zero");
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let top = (x >> (bits - 64) as usize).to_u64().unwrap();
    (top as f64).log2() + (bits - 64) as f64
}

/// `log2` of a positive rational without intermediate overflow.
pub fn log2_rational(r: &Rational) -> f64 {
    assert!(r.is_positive(), "log2 of non-positive rational");
    log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude())
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

pub fn biguint_to_rational(x: BigUint) -> Rational {
    Rational::from_integer(BigInt::from_biguint(Sign::Plus, x))
}

/// Serde adapter for a single rational as a `"num/den"` string.
pub mod serde_rational {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).map_err(de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_rational_vec {
    use super::*;
    use serde::{de, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format_rational(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Rational>`.
pub mod serde_rational_opt {
    use super::*;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        r: &Option<Rational>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| parse_rational(&s).map_err(de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_accepted_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational(" 6/8 ").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-.5").unwrap(), rat(-1, 2));
        assert_eq!(parse_rational("1/-2").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_always_has_denominator() {
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&rat(0, 5)), "0/1");
        assert_eq!(format_rational(&rat(-6, 4)), "-3/2");
    }

    #[test]
    fn float_conversion_handles_huge_operands() {
        assert_eq!(to_f64(&rat(3, 4)), 0.75);
        assert_eq!(to_f64(&rat(-1, 3)), -1.0 / 3.0);
        let tiny = Rational::new(BigInt::one(), num_traits::pow(BigInt::from(3), 2000));
        let expect = -(2000.0 * 3f64.log2());
        assert!((log2_rational(&tiny) - expect).abs() < 1e-9);
        assert_eq!(to_f64(&tiny), 0.0);
        let r = Rational::new(
            num_traits::pow(BigInt::from(7), 400),
            num_traits::pow(BigInt::from(7), 399) * BigInt::from(2),
        );
        assert_eq!(to_f64(&r), 3.5);
    }

    #[test]
    fn from_f64_is_exact() {
        assert_eq!(from_f64(0.375).unwrap(), rat(3, 8));
        assert!(from_f64(f64::NAN).is_err());
    }
}
