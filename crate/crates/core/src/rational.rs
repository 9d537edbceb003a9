use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::{log2_biguint, Dyadic};
use crate::error::{Error, Result};

/// A point of `(0, 1]` held as a reduced fraction.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    num: BigUint,
    den: BigUint,
}

impl RationalPoint {
    /// Builds `num / den`, reducing it. Rejects values outside `(0, 1]`.
    pub fn new(num: impl Into<BigUint>, den: impl Into<BigUint>) -> Result<Self> {
        let (num, den) = (num.into(), den.into());
        if num.is_zero() || den.is_zero() || num > den {
            return Err(Error::OutOfRange(format!("{num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(RationalPoint {
            num: num / &g,
            den: den / g,
        })
    }

    /// Trusted constructor for values already reduced and in range.
    pub(crate) fn from_reduced(num: BigUint, den: BigUint) -> Self {
        debug_assert!(!num.is_zero() && num <= den);
        debug_assert!(num.gcd(&den).is_one());
        RationalPoint { num, den }
    }

    pub fn one() -> Self {
        RationalPoint {
            num: BigUint::one(),
            den: BigUint::one(),
        }
    }

    /// `m / 2^e`.
    pub fn dyadic(m: impl Into<BigUint>, e: u64) -> Result<Self> {
        RationalPoint::new(m, BigUint::one() << e)
    }

    pub fn numerator(&self) -> &BigUint {
        &self.num
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    /// True when the denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        is_power_of_two(&self.den)
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn to_f64(&self) -> f64 {
        match (self.num.to_f64(), self.den.to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => (log2_biguint(&self.num) - log2_biguint(&self.den)).exp2(),
        }
    }

    pub fn to_dyadic(&self) -> Option<Dyadic> {
        if !self.is_dyadic() {
            return None;
        }
        Some(Dyadic::new(self.num.clone(), self.den.bits() - 1))
    }

    /// Compares this point against a non-negative dyadic value.
    pub fn cmp_dyadic(&self, other: &Dyadic) -> Ordering {
        // num / den  vs  m / 2^e   <=>   num * 2^e  vs  m * den
        let lhs = &self.num << other.exponent();
        let rhs = other.numerator() * &self.den;
        lhs.cmp(&rhs)
    }
}

pub(crate) fn is_power_of_two(n: &BigUint) -> bool {
    !n.is_zero() && n.trailing_zeros() == Some(n.bits() - 1)
}

impl TryFrom<&Dyadic> for RationalPoint {
    type Error = Error;

    fn try_from(d: &Dyadic) -> Result<Self> {
        RationalPoint::new(d.numerator().clone(), BigUint::one() << d.exponent())
    }
}

impl Ord for RationalPoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for RationalPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts `p/q`, `p/2^e` and the bare integer `1`.
impl FromStr for RationalPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_int = |t: &str| -> Result<BigUint> {
            let t = t.trim();
            t.parse::<BigUint>()
                .map_err(|_| Error::parse(s, format!("{t:?} is not a non-negative integer")))
        };
        let (num, den) = match s.split_once('/') {
            None => (parse_int(s)?, BigUint::one()),
            Some((p, q)) => {
                let q = q.trim();
                let den = match q.strip_prefix("2^") {
                    Some(e) => {
                        let e: u64 = e
                            .trim()
                            .parse()
                            .map_err(|_| Error::parse(s, "bad power-of-two exponent"))?;
                        BigUint::one() << e
                    }
                    None => parse_int(q)?,
                };
                (parse_int(p)?, den)
            }
        };
        RationalPoint::new(num, den)
    }
}

impl Serialize for RationalPoint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RationalPoint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduces_and_validates() {
        let x = RationalPoint::new(6u32, 10u32).unwrap();
        assert_eq!(x.to_string(), "3/5");
        assert!(RationalPoint::new(0u32, 3u32).is_err());
        assert!(RationalPoint::new(4u32, 3u32).is_err());
        assert!(RationalPoint::new(1u32, 0u32).is_err());
        assert_eq!(RationalPoint::new(7u32, 7u32).unwrap(), RationalPoint::one());
    }

    #[test]
    fn parses_fraction_forms() {
        assert_eq!("1/5".parse::<RationalPoint>().unwrap().to_string(), "1/5");
        assert_eq!("3/2^3".parse::<RationalPoint>().unwrap().to_string(), "3/8");
        assert_eq!(" 1 ".parse::<RationalPoint>().unwrap(), RationalPoint::one());
        assert!("2".parse::<RationalPoint>().is_err());
        assert!("a/3".parse::<RationalPoint>().is_err());
        assert!("-1/3".parse::<RationalPoint>().is_err());
        assert!("0.5".parse::<RationalPoint>().is_err());
    }

    #[test]
    fn dyadic_detection_and_comparison() {
        let x: RationalPoint = "5/8".parse().unwrap();
        assert!(x.is_dyadic());
        assert_eq!(x.to_dyadic().unwrap().to_string(), "5/2^3");
        let third: RationalPoint = "1/3".parse().unwrap();
        assert!(!third.is_dyadic());
        assert_eq!(third.cmp_dyadic(&Dyadic::pow2_neg(2)), Ordering::Greater);
        assert_eq!(third.cmp_dyadic(&Dyadic::pow2_neg(1)), Ordering::Less);
        assert!(third < x);
        assert_eq!(RationalPoint::one().cmp_dyadic(&Dyadic::one()), Ordering::Equal);
    }
}
