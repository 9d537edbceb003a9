//! Exact digit extraction for `x = Σ 2^-(d1+…+di)`.
//!
//! The map `T x = 2^d x - 1` on the branch `(2^-d, 2^-d+1]` acts as the shift
//! on digit sequences. Branches are left-open and right-closed, so
//! `digit_of(2^-k) = k + 1` and every dyadic point ends in an all-ones tail.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::rational::RationalPoint;

/// A single digit, always `>= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Digit(u32);

impl Digit {
    pub fn new(value: u32) -> Result<Self> {
        if value == 0 {
            Err(Error::InvalidDigit(0))
        } else {
            Ok(Digit(value))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for Digit {
    type Error = Error;
    fn try_from(v: u32) -> Result<Self> {
        Digit::new(v)
    }
}

impl From<Digit> for u32 {
    fn from(d: Digit) -> u32 {
        d.0
    }
}

impl fmt::Display for Digit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A finite digit prefix `(d1, …, dn)`; every entry is `>= 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct DigitWord(Vec<u32>);

impl DigitWord {
    pub fn new(digits: Vec<u32>) -> Result<Self> {
        if digits.contains(&0) {
            return Err(Error::InvalidDigit(0));
        }
        Ok(DigitWord(digits))
    }

    pub fn empty() -> Self {
        DigitWord(Vec::new())
    }

    pub(crate) fn from_vec_unchecked(digits: Vec<u32>) -> Self {
        debug_assert!(!digits.contains(&0));
        DigitWord(digits)
    }

    pub fn digits(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `d1 + … + dn`.
    pub fn digit_sum(&self) -> u64 {
        self.0.iter().map(|&d| u64::from(d)).sum()
    }

    pub fn push(&mut self, digit: Digit) {
        self.0.push(digit.get());
    }

    /// `self · k`.
    pub fn child(&self, k: Digit) -> DigitWord {
        let mut w = self.clone();
        w.push(k);
        w
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

impl TryFrom<Vec<u32>> for DigitWord {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        DigitWord::new(v)
    }
}

impl From<DigitWord> for Vec<u32> {
    fn from(w: DigitWord) -> Vec<u32> {
        w.0
    }
}

impl fmt::Display for DigitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str(")")
    }
}

/// Digit of `x`: the unique `d` with `2^(d-1)·num <= den < 2^d·num`.
pub fn digit_of(x: &RationalPoint) -> Digit {
    let (num, den) = (x.numerator(), x.denominator());
    // num <= den, so the shift is non-negative
    let b = den.bits() - num.bits();
    let e = if (num << b) <= *den { b } else { b - 1 };
    Digit((e + 1) as u32)
}

/// `T x = 2^d x - 1` where `d = digit_of(x)`.
pub fn apply_t(x: &RationalPoint) -> RationalPoint {
    if x.is_dyadic() {
        return apply_t_dyadic(x);
    }
    let d = u64::from(digit_of(x).get());
    let (num, den) = (x.numerator(), x.denominator());
    let shifted = (num << d) - den;
    // gcd(2^d·num - den, den) = gcd(2^d, den): only powers of two cancel
    let tz = shifted
        .trailing_zeros()
        .unwrap_or(0)
        .min(den.trailing_zeros().unwrap_or(0));
    RationalPoint::from_reduced(shifted >> tz, den >> tz)
}

/// Dyadic branch of `T`: for `x = m / 2^e` with `m` odd, `T` strips the
/// leading bit of `m`.
fn apply_t_dyadic(x: &RationalPoint) -> RationalPoint {
    let num = x.numerator();
    let top = num.bits() - 1;
    if top == 0 {
        // x = 2^-e maps to 1
        return RationalPoint::one();
    }
    let mut rest = num.clone();
    rest.set_bit(top, false);
    let tz = rest.trailing_zeros().unwrap_or(0);
    RationalPoint::from_reduced(rest >> tz, BigUint::one() << (top - tz))
}

/// Lazily iterates the digits of `x` by following its `T`-orbit.
#[derive(Clone, Debug)]
pub struct ExpansionDigits {
    state: RationalPoint,
}

impl ExpansionDigits {
    pub fn new(x: RationalPoint) -> Self {
        ExpansionDigits { state: x }
    }

    /// The current point `T^i x`.
    pub fn state(&self) -> &RationalPoint {
        &self.state
    }
}

impl Iterator for ExpansionDigits {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        let d = digit_of(&self.state);
        self.state = apply_t(&self.state);
        Some(d.get())
    }
}

/// First `n` digits of `x`.
pub fn expand(x: &RationalPoint, n: usize) -> DigitWord {
    DigitWord(ExpansionDigits::new(x.clone()).take(n).collect())
}

/// An eventually periodic digit sequence: `preperiod · period^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicExpansion {
    pub preperiod: DigitWord,
    pub period: DigitWord,
}

impl PeriodicExpansion {
    /// The `i`-th digit (0-based).
    pub fn digit(&self, i: usize) -> u32 {
        let pre = self.preperiod.len();
        if i < pre {
            self.preperiod.0[i]
        } else {
            self.period.0[(i - pre) % self.period.len()]
        }
    }

    pub fn prefix(&self, n: usize) -> DigitWord {
        DigitWord((0..n).map(|i| self.digit(i)).collect())
    }

    pub fn digits(&self) -> impl Iterator<Item = u32> + '_ {
        self.preperiod
            .0
            .iter()
            .copied()
            .chain(self.period.0.iter().copied().cycle())
    }
}

impl fmt::Display for PeriodicExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}^inf", self.preperiod, self.period)
    }
}

/// Full digit sequence of a rational as preperiod plus minimal period.
///
/// The orbit of `p/q` under `T` only visits fractions whose denominator
/// divides `q`, so it is finite; the first repeated state closes the cycle.
/// Memory grows with the orbit length, which is at most about `q`.
pub fn expand_periodic(x: &RationalPoint) -> PeriodicExpansion {
    let mut seen: HashMap<RationalPoint, usize> = HashMap::new();
    let mut digits = Vec::new();
    let mut state = x.clone();
    loop {
        if let Some(&start) = seen.get(&state) {
            let period = digits.split_off(start);
            return PeriodicExpansion {
                preperiod: DigitWord(digits),
                period: DigitWord(period),
            };
        }
        seen.insert(state.clone(), digits.len());
        digits.push(digit_of(&state).get());
        state = apply_t(&state);
    }
}

/// A basic interval `(left, right]` of points sharing a digit prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    pub word: DigitWord,
    pub left: Dyadic,
    pub right: Dyadic,
    /// `2^-(d1+…+dn)`
    pub length: Dyadic,
}

impl Cylinder {
    /// True when `left < x <= right`.
    pub fn contains(&self, x: &RationalPoint) -> bool {
        x.cmp_dyadic(&self.left).is_gt() && x.cmp_dyadic(&self.right).is_le()
    }

    pub fn digit_sum(&self) -> u64 {
        self.length.exponent()
    }
}

/// Exact left endpoint `Σ 2^-(d1+…+di)` as a dyadic.
pub(crate) fn partial_sum(digits: &[u32]) -> Dyadic {
    let total: u64 = digits.iter().map(|&d| u64::from(d)).sum();
    let mut num = BigUint::default();
    let mut s = 0u64;
    for &d in digits {
        s += u64::from(d);
        num.set_bit(total - s, true);
    }
    Dyadic::new(num, total)
}

/// Cylinder of a nonempty word: `left = Σ 2^-Si`, `right = left + 2^-Sn`.
pub fn cylinder(word: &DigitWord) -> Result<Cylinder> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let left = partial_sum(word.digits());
    let length = Dyadic::pow2_neg(word.digit_sum());
    let right = &left + &length;
    Ok(Cylinder {
        word: word.clone(),
        left,
        right,
        length,
    })
}

/// The partial sum of a nonempty word (its cylinder's left endpoint).
pub fn reconstruct(word: &DigitWord) -> Result<RationalPoint> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    RationalPoint::try_from(&partial_sum(word.digits()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(s: &str) -> RationalPoint {
        s.parse().unwrap()
    }

    fn w(d: &[u32]) -> DigitWord {
        DigitWord::new(d.to_vec()).unwrap()
    }

    /// Independent oracle: Σ 2^-Si by plain f64 for short words.
    fn float_partial_sum(d: &[u32]) -> f64 {
        let mut s = 0i32;
        d.iter()
            .map(|&k| {
                s += k as i32;
                (-s as f64).exp2()
            })
            .sum()
    }

    #[test]
    fn digit_of_examples() {
        assert_eq!(digit_of(&RationalPoint::one()).get(), 1);
        assert_eq!(digit_of(&rp("1/2")).get(), 2);
        assert_eq!(digit_of(&rp("1/5")).get(), 3);
        assert_eq!(digit_of(&rp("5/8")).get(), 1);
        assert_eq!(digit_of(&rp("3/4")).get(), 1);
        assert_eq!(digit_of(&rp("1/3")).get(), 2);
    }

    #[test]
    fn right_closed_branches_at_powers_of_two() {
        for k in 1..80u64 {
            let x = RationalPoint::dyadic(1u32, k).unwrap();
            assert_eq!(u64::from(digit_of(&x).get()), k + 1);
            let tail = expand(&x, 6);
            assert_eq!(tail.digits()[1..], [1, 1, 1, 1, 1]);
        }
    }

    #[test]
    fn apply_t_examples() {
        assert_eq!(apply_t(&RationalPoint::one()), RationalPoint::one());
        assert_eq!(apply_t(&rp("1/5")), rp("3/5"));
        assert_eq!(apply_t(&rp("5/8")), rp("1/4"));
        assert_eq!(apply_t(&rp("1/3")), rp("1/3"));
        assert_eq!(apply_t(&rp("1/2")), RationalPoint::one());
        // cross-check 1/5 against float evaluation of 2^d x - 1
        let y = apply_t(&rp("1/5")).to_f64();
        assert!((y - (8.0 * 0.2 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn dyadic_fast_path_matches_general_formula() {
        for num in 1u32..300 {
            let x = RationalPoint::dyadic(num, 9).unwrap();
            let d = u64::from(digit_of(&x).get());
            let general = RationalPoint::new((x.numerator() << d) - x.denominator(), x.denominator().clone()).unwrap();
            assert_eq!(apply_t(&x), general, "x = {x}");
        }
    }

    #[test]
    fn expand_examples() {
        assert_eq!(expand(&rp("5/8"), 4), w(&[1, 3, 1, 1]));
        assert_eq!(expand(&rp("1/3"), 4), w(&[2, 2, 2, 2]));
        assert_eq!(expand(&RationalPoint::one(), 3), w(&[1, 1, 1]));
        assert!(expand(&rp("1/3"), 0).is_empty());
        // 5/8 = 2^-1 + 2^-4 + 2^-5 + 2^-6 + …  reconstruction check
        let left = float_partial_sum(&[1, 3, 1, 1]);
        assert!(left < 0.625 && 0.625 <= left + (-6f64).exp2());
    }

    #[test]
    fn periodic_examples() {
        let p = expand_periodic(&rp("1/5"));
        assert!(p.preperiod.is_empty());
        assert_eq!(p.period, w(&[3, 1]));
        let p = expand_periodic(&rp("1/3"));
        assert!(p.preperiod.is_empty());
        assert_eq!(p.period, w(&[2]));
        let p = expand_periodic(&rp("1/2"));
        assert_eq!(p.preperiod, w(&[2]));
        assert_eq!(p.period, w(&[1]));
        assert_eq!(expand_periodic(&RationalPoint::one()).period, w(&[1]));
        assert_eq!(p.to_string(), "(2)(1)^inf");
    }

    #[test]
    fn cylinder_examples() {
        let c = cylinder(&w(&[1, 2])).unwrap();
        assert_eq!(RationalPoint::try_from(&c.left).unwrap(), rp("5/8"));
        assert_eq!(RationalPoint::try_from(&c.right).unwrap(), rp("3/4"));
        assert_eq!(c.length, Dyadic::pow2_neg(3));

        let c = cylinder(&w(&[1])).unwrap();
        assert_eq!(c.left, Dyadic::pow2_neg(1));
        assert_eq!(c.right, Dyadic::one());

        let c = cylinder(&w(&[2, 1, 1])).unwrap();
        assert_eq!(RationalPoint::try_from(&c.left).unwrap(), rp("7/16"));
        assert_eq!(RationalPoint::try_from(&c.right).unwrap(), rp("1/2"));
        assert_eq!(c.length, Dyadic::pow2_neg(4));
        // 1/2 = (2,1,1,…) sits on the closed right end
        assert!(c.contains(&rp("1/2")));
        assert_eq!(expand(&rp("1/2"), 3), w(&[2, 1, 1]));

        assert_eq!(cylinder(&DigitWord::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct(&w(&[2, 2, 2])).unwrap(), rp("21/64"));
        assert_eq!(reconstruct(&w(&[1, 3])).unwrap(), rp("9/16"));
        for n in 1..40 {
            let ones = DigitWord::new(vec![1; n]).unwrap();
            let expected = RationalPoint::new((BigUint::one() << n) - 1u32, BigUint::one() << n).unwrap();
            assert_eq!(reconstruct(&ones).unwrap(), expected);
        }
        assert_eq!(reconstruct(&DigitWord::empty()), Err(Error::EmptyWord));
    }

    #[test]
    fn word_validation() {
        assert!(DigitWord::new(vec![1, 0, 2]).is_err());
        assert!(Digit::new(0).is_err());
        assert_eq!(w(&[1, 3, 1]).to_string(), "(1,3,1)");
        assert_eq!(w(&[4, 1, 7]).digit_sum(), 12);
        let json = serde_json::to_string(&w(&[3, 1])).unwrap();
        assert_eq!(json, "[3,1]");
        assert!(serde_json::from_str::<DigitWord>("[3,0]").is_err());
    }
}
