//! Threshold functions `φ(n) = a·n^r + b·log2 n + c·log2 log n + c0`.
//!
//! Digits are integers, so the event `dn >= φ(n)` is the same as
//! `dn >= ⌈φ(n)⌉`; every oracle uses that integer threshold.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhiSpec {
    /// coefficient of `n^r`
    pub a: f64,
    pub r: f64,
    /// coefficient of `log2 n`
    pub b: f64,
    /// coefficient of `log2 log n` (natural inner log)
    pub c: f64,
    pub c0: f64,
}

/// `log2(ln n)`, clamped to 0 for `n < 3` where `ln n < 1`.
fn log2_log(n: f64) -> f64 {
    n.ln().max(1.0).log2()
}

impl PhiSpec {
    pub fn constant(c0: f64) -> Self {
        PhiSpec {
            c0,
            ..Default::default()
        }
    }

    /// `log2 n + t·log2 log n`.
    pub fn log_family(t: f64) -> Self {
        PhiSpec {
            b: 1.0,
            c: t,
            ..Default::default()
        }
    }

    /// `alpha · n`.
    pub fn linear(alpha: f64) -> Self {
        PhiSpec {
            a: alpha,
            r: 1.0,
            ..Default::default()
        }
    }

    pub fn eval(&self, n: u64) -> f64 {
        self.eval_real(n as f64)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        let mut v = self.c0;
        if self.a != 0.0 {
            v += self.a * x.powf(self.r);
        }
        if self.b != 0.0 {
            v += self.b * x.log2();
        }
        if self.c != 0.0 {
            v += self.c * log2_log(x);
        }
        v
    }

    /// `max(1, ⌈φ(n)⌉)`; non-finite or huge values map to `u32::MAX`.
    pub fn threshold(&self, n: u64) -> u32 {
        let v = self.eval(n).ceil();
        if v.is_nan() || v >= u32::MAX as f64 {
            u32::MAX
        } else if v <= 1.0 {
            1
        } else {
            v as u32
        }
    }

    /// `P(dn >= φ(n)) = 2^(1 - ⌈φ(n)⌉)` under Lebesgue measure.
    pub fn hit_probability(&self, n: u64) -> f64 {
        hit_probability_for_threshold(self.threshold(n))
    }

    /// True when the dominant term grows without bound.
    pub fn tends_to_infinity(&self) -> bool {
        let power = if self.r > 0.0 { self.a } else { 0.0 };
        for lead in [power, self.b, self.c] {
            if lead != 0.0 {
                return lead > 0.0;
            }
        }
        false
    }

    /// Checks `φ(n) <= φ(n+1)` for `1 <= n < horizon`.
    pub fn first_decrease(&self, horizon: u64) -> Option<u64> {
        let mut prev = self.eval(1);
        for n in 2..=horizon {
            let v = self.eval(n);
            if v < prev {
                return Some(n - 1);
            }
            prev = v;
        }
        None
    }
}

pub(crate) fn hit_probability_for_threshold(t: u32) -> f64 {
    if t <= 1 {
        1.0
    } else {
        (1.0 - f64::from(t)).exp2()
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        if self.a != 0.0 {
            terms.push(format!("{}*n^{}", self.a, self.r));
        }
        if self.b != 0.0 {
            terms.push(format!("{}*log2n", self.b));
        }
        if self.c != 0.0 {
            terms.push(format!("{}*log2log n", self.c));
        }
        if self.c0 != 0.0 || terms.is_empty() {
            terms.push(format!("{}", self.c0));
        }
        f.write_str(&terms.join(" + "))
    }
}

/// Parses sums of `a*n^r`, `a*n`, `b*log2n`, `c*log2log n` and constants.
///
/// Whitespace is ignored, `*` is optional and signs may separate terms:
/// `"log2n + 2log2log n"`, `"0.5*n^0.5 - 1"`, `"2 log2 n"`.
impl FromStr for PhiSpec {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::parse(input, "empty expression"));
        }
        let mut phi = PhiSpec::default();
        let mut power: Option<f64> = None;

        // split into signed terms, keeping exponent signs such as 1e-3 intact
        let mut terms: Vec<(f64, String)> = Vec::new();
        let mut cur = String::new();
        let mut sign = 1.0;
        let chars: Vec<char> = s.chars().collect();
        for (i, &ch) in chars.iter().enumerate() {
            let prev = if i > 0 { Some(chars[i - 1]) } else { None };
            let exponent_sign = matches!(prev, Some('e') | Some('E') | Some('^'))
                && cur
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'n');
            if (ch == '+' || ch == '-') && !exponent_sign {
                if !cur.is_empty() {
                    terms.push((sign, std::mem::take(&mut cur)));
                } else if i > 0 {
                    return Err(Error::parse(input, "dangling operator"));
                }
                sign = if ch == '-' { -1.0 } else { 1.0 };
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(Error::parse(input, "trailing operator"));
        }
        terms.push((sign, cur));

        for (sign, term) in terms {
            let split = term
                .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E'))
                .unwrap_or(term.len());
            // a leading 'e' would swallow nothing useful; treat as no coefficient
            let (coef_str, atom) = term.split_at(split);
            let coef = if coef_str.is_empty() {
                1.0
            } else {
                coef_str
                    .parse::<f64>()
                    .map_err(|_| Error::parse(input, format!("bad coefficient {coef_str:?}")))?
            } * sign;
            let atom = atom.strip_prefix('*').unwrap_or(atom);
            match atom {
                "" => phi.c0 += coef,
                "log2n" => phi.b += coef,
                "log2logn" | "log2log(n)" | "log2(logn)" | "log2(log(n))" => phi.c += coef,
                "n" => add_power(&mut phi, &mut power, coef, 1.0, input)?,
                _ => {
                    let r = atom
                        .strip_prefix("n^")
                        .ok_or_else(|| Error::parse(input, format!("unknown term {atom:?}")))?;
                    let r = r.trim_matches(|c| c == '(' || c == ')');
                    let r: f64 = r
                        .parse()
                        .map_err(|_| Error::parse(input, format!("bad exponent {r:?}")))?;
                    add_power(&mut phi, &mut power, coef, r, input)?;
                }
            }
        }
        Ok(phi)
    }
}

fn add_power(phi: &mut PhiSpec, power: &mut Option<f64>, coef: f64, r: f64, input: &str) -> Result<()> {
    match power {
        Some(existing) if *existing != r => Err(Error::parse(input, "at most one distinct power n^r is supported")),
        _ => {
            *power = Some(r);
            phi.r = r;
            phi.a += coef;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_paper_family() {
        let p: PhiSpec = "log2n+log2log n".parse().unwrap();
        assert_eq!(p, PhiSpec::log_family(1.0));
        let p: PhiSpec = "log2n + 2log2log n".parse().unwrap();
        assert_eq!(p, PhiSpec::log_family(2.0));
        let p: PhiSpec = "2log2n".parse().unwrap();
        assert_eq!(p.b, 2.0);
        let p: PhiSpec = "0.5*n^0.5 - 1".parse().unwrap();
        assert_eq!((p.a, p.r, p.c0), (0.5, 0.5, -1.0));
        let p: PhiSpec = "3n".parse().unwrap();
        assert_eq!(p, PhiSpec::linear(3.0));
        let p: PhiSpec = "1e3".parse().unwrap();
        assert_eq!(p, PhiSpec::constant(1000.0));
        let p: PhiSpec = "n^-0.5".parse().unwrap();
        assert_eq!((p.a, p.r), (1.0, -0.5));
    }

    #[test]
    fn rejects_garbage() {
        assert!("".parse::<PhiSpec>().is_err());
        assert!("log3n".parse::<PhiSpec>().is_err());
        assert!("n^2 + n^3".parse::<PhiSpec>().is_err());
        assert!("log2n +".parse::<PhiSpec>().is_err());
        assert!("x".parse::<PhiSpec>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in ["log2n + 2log2log n", "0.5*n^0.5 - 1", "7"] {
            let p: PhiSpec = src.parse().unwrap();
            let again: PhiSpec = p.to_string().replace("+ -", "-").parse().unwrap();
            assert_eq!(p, again, "{src}");
        }
    }

    #[test]
    fn thresholds_and_probabilities() {
        let p = PhiSpec::log_family(0.0);
        assert_eq!(p.threshold(1), 1);
        assert_eq!(p.threshold(8), 3);
        assert_eq!(p.threshold(9), 4);
        assert_eq!(p.hit_probability(8), 0.25);
        assert_eq!(PhiSpec::constant(1.0).hit_probability(5), 1.0);
        assert_eq!(PhiSpec::constant(1e12).threshold(5), u32::MAX);
        assert_eq!(PhiSpec::constant(1e12).hit_probability(5), 0.0);
        // loglog guard: finite everywhere, exact from n = 3 on
        let q = PhiSpec::log_family(1.0);
        assert!(q.eval(1).is_finite() && q.eval(2).is_finite());
        assert!((q.eval(3) - (3f64.log2() + 3f64.ln().log2())).abs() < 1e-15);
    }

    #[test]
    fn growth_classification() {
        assert!(PhiSpec::log_family(1.0).tends_to_infinity());
        assert!(!PhiSpec::constant(4.0).tends_to_infinity());
        assert!(PhiSpec::linear(0.1).tends_to_infinity());
        let p: PhiSpec = "-n + 100log2n".parse().unwrap();
        assert!(!p.tends_to_infinity());
        assert_eq!(PhiSpec::log_family(1.0).first_decrease(10_000), None);
        assert!(p.first_decrease(10_000).is_some());
    }
}
