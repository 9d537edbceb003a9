//! Non-negative dyadic rationals `m / 2^e`.
//!
//! Cylinder endpoints, cylinder lengths and gaps between fundamental
//! intervals are all dyadic, so every geometric computation in this crate is
//! carried out exactly in this type.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// Exact value `numerator / 2^exponent`, stored with an odd numerator
/// (or as `0 / 2^0`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    numerator: BigUint,
    exponent: u64,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            numerator: BigUint::one(),
            exponent: 0,
        }
    }

    /// `2^-e`.
    pub fn pow2_neg(e: u64) -> Self {
        Dyadic {
            numerator: BigUint::one(),
            exponent: e,
        }
    }

    pub fn new(numerator: BigUint, exponent: u64) -> Self {
        let mut d = Dyadic { numerator, exponent };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0).min(self.exponent);
        if tz > 0 {
            self.numerator >>= tz;
            self.exponent -= tz;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// Multiplies by `2^-e`.
    pub fn shr(&self, e: u64) -> Self {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            numerator: self.numerator.clone(),
            exponent: self.exponent + e,
        }
    }

    fn aligned(&self, other: &Dyadic) -> (BigUint, BigUint, u64) {
        let e = self.exponent.max(other.exponent);
        let a = &self.numerator << (e - self.exponent);
        let b = &other.numerator << (e - other.exponent);
        (a, b, e)
    }

    /// `self - other`, or `None` when the result would be negative.
    pub fn checked_sub(&self, other: &Dyadic) -> Option<Dyadic> {
        let (a, b, e) = self.aligned(other);
        if a < b {
            None
        } else {
            Some(Dyadic::new(a - b, e))
        }
    }

    /// Base-2 logarithm; `-inf` for zero.
    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        log2_biguint(&self.numerator) - self.exponent as f64
    }

    /// Nearest `f64`, exact whenever the numerator fits in 53 bits.
    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        let shift = bits.saturating_sub(64);
        let top = (&self.numerator >> shift).to_u64().unwrap_or(0) as f64;
        ldexp(top, shift as i64 - self.exponent as i64)
    }
}

/// `x · 2^k` without intermediate overflow or underflow.
fn ldexp(mut x: f64, mut k: i64) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
    }
    x * 2f64.powi(k as i32)
}

/// `log2(n)` for a positive big integer, accurate to f64 precision.
pub(crate) fn log2_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 64 {
        return n.to_u64().map_or(f64::NEG_INFINITY, |v| (v as f64).log2());
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

impl Add for &Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a + b, e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        &self + &rhs
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exponent == 0 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/2^{}", self.numerator, self.exponent)
        }
    }
}
