//! Arbitrary-precision rationals used for every exact probability in the crate.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CvError;

/// Exact rational number, always in lowest terms with a positive denominator.
///
/// Serializes as the decimal string `"num/den"` (integers as `"num/1"`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        let denom = denom.into();
        assert!(!denom.is_zero(), "zero denominator");
        ExactRational(BigRational::new(numer.into(), denom))
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        ExactRational(BigRational::from_integer(value.into()))
    }

    /// `numer / 2^exp`, the shape every probability under fair-coin labels takes.
    pub fn dyadic(numer: impl Into<BigInt>, exp: u64) -> Self {
        Self::new(numer, BigInt::one() << exp)
    }

    pub fn zero() -> Self {
        ExactRational(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactRational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        ExactRational(self.0.abs())
    }

    pub fn as_big_rational(&self) -> &BigRational {
        &self.0
    }

    /// Nearest-ish `f64`, valid even when numerator and denominator
    /// individually overflow `f64` (denominators here reach 2^4096).
    pub fn to_f64(&self) -> f64 {
        let (mantissa, exp) = self.to_f64_parts();
        mantissa * 2f64.powi(exp)
    }

    /// Natural logarithm; `-inf` for zero. Panics on negative values.
    pub fn ln(&self) -> f64 {
        assert!(!self.is_negative(), "ln of a negative rational");
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (mantissa, exp) = self.to_f64_parts();
        mantissa.ln() + crate::binomial::ln2_multiple(exp as f64)
    }

    /// Splits into `(mantissa, exp)` with the value equal to `mantissa * 2^exp`
    /// up to one rounding of the mantissa.
    fn to_f64_parts(&self) -> (f64, i32) {
        if self.is_zero() {
            return (0.0, 0);
        }
        let sign = if self.0.is_negative() { -1.0 } else { 1.0 };
        let num = self.numer().magnitude();
        let den = self.denom().magnitude();
        // Scale the numerator so the integer quotient carries 64+ significant bits.
        let shift = 64 + den.bits() as i64 - num.bits() as i64;
        let (scaled_num, scaled_den) = if shift >= 0 {
            (num << shift as u64, den.clone())
        } else {
            (num.clone(), den << (-shift) as u64)
        };
        let quotient: BigUint = scaled_num / scaled_den;
        let qbits = quotient.bits() as i64;
        let drop = (qbits - 64).max(0);
        let top = (quotient >> drop as u64).to_u64().expect("fits in 64 bits");
        (sign * top as f64, (drop - shift) as i32)
    }

    pub fn pow(&self, exp: u32) -> Self {
        ExactRational(num_traits::pow(self.0.clone(), exp as usize))
    }

    pub fn recip(&self) -> Self {
        ExactRational(self.0.recip())
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl fmt::Debug for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactRational {
    type Err = CvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parse = |part: &str| BigInt::from_str(part.trim()).map_err(|e| CvError::Parse(format!("{s:?}: {e}")));
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err(CvError::Parse(format!("{s:?}: zero denominator")));
                }
                Ok(Self::new(parse(n)?, d))
            }
            None => Ok(Self::from_integer(parse(s)?)),
        }
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<BigRational> for ExactRational {
    fn from(value: BigRational) -> Self {
        ExactRational(value)
    }
}

impl From<i64> for ExactRational {
    fn from(value: i64) -> Self {
        Self::from_integer(value)
    }
}

impl From<BigUint> for ExactRational {
    fn from(value: BigUint) -> Self {
        Self::from_integer(BigInt::from_biguint(Sign::Plus, value))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: ExactRational) -> ExactRational {
                ExactRational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactRational> for &'a ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $trait<&'a ExactRational> for ExactRational {
            type Output = ExactRational;
            fn $method(self, rhs: &'a ExactRational) -> ExactRational {
                ExactRational(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for ExactRational {
    type Output = ExactRational;
    fn neg(self) -> ExactRational {
        ExactRational(-self.0)
    }
}

impl Sum for ExactRational {
    fn sum<I: Iterator<Item = ExactRational>>(iter: I) -> Self {
        iter.fold(ExactRational::zero(), |acc, x| acc + x)
    }
}

impl PartialEq<i64> for ExactRational {
    fn eq(&self, other: &i64) -> bool {
        self.0 == BigRational::from_integer(BigInt::from(*other))
    }
}

impl PartialOrd<i64> for ExactRational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.0.partial_cmp(&BigRational::from_integer(BigInt::from(*other)))
    }
}

/// Shorthand for small literals in tests and tables: `ratio(95, 4096)`.
pub fn ratio(numer: i64, denom: i64) -> ExactRational {
    ExactRational::new(numer, denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowest_terms_and_positive_denominator() {
        let r = ExactRational::new(6, -8);
        assert_eq!(r.to_string(), "-3/4");
        assert_eq!(ExactRational::from_integer(5).to_string(), "5/1");
    }

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!("7/96".parse::<ExactRational>().unwrap(), ratio(7, 96));
        assert_eq!(" 12 ".parse::<ExactRational>().unwrap(), ratio(12, 1));
        assert!("1/0".parse::<ExactRational>().is_err());
        assert!("abc".parse::<ExactRational>().is_err());
    }

    #[test]
    fn to_f64_survives_huge_denominators() {
        let tiny = ExactRational::dyadic(3, 5000);
        let expected_ln = 3f64.ln() - 5000.0 * std::f64::consts::LN_2;
        assert!((tiny.ln() - expected_ln).abs() < 1e-12);
        let half = ExactRational::new(BigInt::one() << 4095u32, BigInt::one() << 4096u32);
        assert_eq!(half.to_f64(), 0.5);
        assert_eq!(ratio(-1, 3).to_f64(), -1.0 / 3.0);
    }

    #[test]
    fn serde_uses_num_den_strings() {
        let json = serde_json::to_string(&ratio(95, 4096)).unwrap();
        assert_eq!(json, "\"95/4096\"");
        let back: ExactRational = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ratio(95, 4096));
    }

    proptest! {
        #[test]
        fn string_round_trip(n in any::<i64>(), d in 1i64..i64::MAX) {
            let r = ExactRational::new(n, d);
            let back: ExactRational = r.to_string().parse().unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn to_f64_matches_native_division(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            let r = ExactRational::new(n, d);
            let native = n as f64 / d as f64;
            prop_assert!((r.to_f64() - native).abs() <= native.abs() * 4.0 * f64::EPSILON);
        }
    }
}
