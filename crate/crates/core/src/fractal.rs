//! Cantor-type digit sets: `F_M(α)`, `E_M(r, α)` and the bounded-digit set
//! `E_M`, described symbolically by their admissible digit ranges.
//!
//! At a free position the digit ranges over `1..=M`. At the k-th special
//! position `n_k` it is forced into
//! `⌊α n_k⌋ + 1 ..= ⌊(1 + 1/k) α n_k⌋` (F flavor) or fixed to `⌊α n_k^r⌋`
//! with `n_k = k^t` (E flavor).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dimension::solve_s_m_alpha;
use crate::dyadic::{log2_biguint, Dyadic};
use crate::error::{Error, Result};
use crate::expansion::{partial_sum, DigitWord};
use crate::sampler::MaxDigitTrajectory;

// ---------------------------------------------------------------- n_k

/// Special positions `n1 < n2 < ...`, finitely materialized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseIndexSequence {
    positions: Vec<u64>,
}

impl SparseIndexSequence {
    pub fn new(positions: Vec<u64>) -> Result<Self> {
        if positions.first() == Some(&0) {
            return Err(Error::InvalidSpec("positions start at 1".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSpec("positions must be strictly increasing".into()));
        }
        Ok(SparseIndexSequence { positions })
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `n_k` for 1-based `k`.
    pub fn get(&self, k: usize) -> Option<u64> {
        k.checked_sub(1).and_then(|i| self.positions.get(i).copied())
    }

    /// The 1-based `k` with `n_k = pos`.
    pub fn index_of(&self, pos: u64) -> Option<u64> {
        self.positions.binary_search(&pos).ok().map(|i| i as u64 + 1)
    }
}

fn floor_mul(alpha: f64, n: u64) -> u64 {
    (alpha * n as f64).floor() as u64
}

/// `⌊(1 + 1/k) α n⌋`.
fn floor_mul_frac(alpha: f64, k: u64, n: u64) -> u64 {
    (alpha * ((k + 1) * n) as f64 / k as f64).floor() as u64
}

/// `⌊(1 + 1/k) α n⌋ - ⌊α n⌋ > 1`.
pub fn nk_gap_ok(alpha: f64, k: u64, n: u64) -> bool {
    floor_mul_frac(alpha, k, n) > floor_mul(alpha, n) + 1
}

const SEARCH_LIMIT: u64 = 100_000_000;

/// Greedy minimal sequence: `n_k` is the least `n > (k+1)·(n1 + ... + n_{k-1})`
/// with `⌊(1 + 1/k) α n⌋ - ⌊α n⌋ > 1`.
pub fn generate_nk(alpha: f64, count: usize) -> Result<SparseIndexSequence> {
    generate_nk_filtered(alpha, count, |_| true)
}

/// As [`generate_nk`], additionally requiring `filter(n_k)` for `k >= 2`.
pub fn generate_nk_filtered(alpha: f64, count: usize, filter: impl Fn(u64) -> bool) -> Result<SparseIndexSequence> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Precondition(format!(
            "alpha must be finite and > 0, got {alpha}"
        )));
    }
    let mut positions: Vec<u64> = Vec::with_capacity(count);
    let mut sum = 0u64;
    for k in 1..=count as u64 {
        let floor = (k + 1)
            .checked_mul(sum)
            .ok_or_else(|| Error::Precondition("n_k overflows u64".into()))?;
        let floor = floor.max(positions.last().copied().unwrap_or(0));
        let mut n = floor + 1;
        let limit = n.saturating_add(SEARCH_LIMIT);
        while !(nk_gap_ok(alpha, k, n) && (k == 1 || filter(n))) {
            n += 1;
            if n > limit {
                return Err(Error::Precondition(format!("no admissible n_{k} below {limit}")));
            }
        }
        positions.push(n);
        sum = sum
            .checked_add(n)
            .ok_or_else(|| Error::Precondition("n_k overflows u64".into()))?;
    }
    let seq = SparseIndexSequence { positions };
    check_f_sequence(alpha, &seq)?;
    Ok(seq)
}

fn check_f_sequence(alpha: f64, seq: &SparseIndexSequence) -> Result<()> {
    let mut sum = 0u128;
    for (i, &n) in seq.positions.iter().enumerate() {
        let k = i as u64 + 1;
        if !nk_gap_ok(alpha, k, n) {
            return Err(Error::InvalidSpec(format!(
                "n_{k} = {n}: forced range ⌊α n⌋+1..=⌊(1+1/k) α n⌋ has fewer than two digits"
            )));
        }
        if u128::from(k) * sum >= u128::from(n) {
            return Err(Error::InvalidSpec(format!(
                "n_{k} = {n} must exceed {k} * (n_1 + ... + n_{})",
                k - 1
            )));
        }
        sum += u128::from(n);
    }
    Ok(())
}

// ---------------------------------------------------------------- specs

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    /// `F_M(α)`: forced digit ranges at greedy sparse positions
    F,
    /// `E_M(r, α)`: single forced digits at `n_k = k^t`
    E,
    /// `E_M`: every digit in `1..=M`
    Bounded,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::F => "F",
            Flavor::E => "E",
            Flavor::Bounded => "bounded",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flavor")]
pub enum Kind {
    F { nk: SparseIndexSequence },
    E { r: f64, t: u32 },
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSpec {
    m: u32,
    alpha: f64,
    kind: Kind,
}

/// Admissible digits `lo..=hi` at one position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitRange {
    pub lo: u32,
    pub hi: u32,
    /// `k` when the position is `n_k`
    pub special: Option<u64>,
}

impl DigitRange {
    pub fn width(&self) -> u32 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, d: u32) -> bool {
        (self.lo..=self.hi).contains(&d)
    }
}

fn to_digit(v: u64, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidSpec(format!("{what} = {v} does not fit a digit")))
}

impl ConstructionSpec {
    fn check_common(m: u32, alpha: f64) -> Result<()> {
        if m < 2 {
            return Err(Error::InvalidSpec(format!("M must be >= 2, got {m}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidSpec(format!("alpha must be finite and > 0, got {alpha}")));
        }
        Ok(())
    }

    /// `F_M(α)` over an explicit sequence, which must satisfy both `n_k`
    /// conditions.
    pub fn f_flavor(m: u32, alpha: f64, nk: SparseIndexSequence) -> Result<Self> {
        Self::check_common(m, alpha)?;
        if nk.is_empty() {
            return Err(Error::InvalidSpec("F flavor needs at least one n_k".into()));
        }
        check_f_sequence(alpha, &nk)?;
        let spec = ConstructionSpec {
            m,
            alpha,
            kind: Kind::F { nk },
        };
        // every forced digit must be representable
        if let Kind::F { nk } = &spec.kind {
            let k = nk.len() as u64;
            to_digit(floor_mul_frac(alpha, k, nk.positions[nk.len() - 1]), "forced digit")?;
        }
        Ok(spec)
    }

    /// `F_M(α)` with the first `terms` greedy positions.
    pub fn f_flavor_greedy(m: u32, alpha: f64, terms: usize) -> Result<Self> {
        Self::f_flavor(m, alpha, generate_nk(alpha, terms.max(1))?)
    }

    /// `F_M(α)` with enough greedy positions to describe ranks up to `rank`.
    pub fn f_flavor_covering(m: u32, alpha: f64, rank: u64) -> Result<Self> {
        let mut terms = 1;
        loop {
            let spec = Self::f_flavor_greedy(m, alpha, terms)?;
            if spec.horizon() >= rank {
                return Ok(spec);
            }
            terms += 1;
        }
    }

    /// `E_M(r, α)` with `n_k = k^t`.
    pub fn e_flavor(m: u32, r: f64, alpha: f64, t: u32) -> Result<Self> {
        Self::check_common(m, alpha)?;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidSpec(format!("r must be finite and > 0, got {r}")));
        }
        if t == 0 || r + 1.0 / f64::from(t) >= 1.0 {
            return Err(Error::InvalidSpec(format!(
                "need an integer t >= 1 with r + 1/t < 1 (r = {r}, t = {t})"
            )));
        }
        let spec = ConstructionSpec {
            m,
            alpha,
            kind: Kind::E { r, t },
        };
        if spec.e_forced_digit(1) == 0 {
            return Err(Error::InvalidSpec(format!(
                "forced digit ⌊α·1^r⌋ = 0 for alpha = {alpha}"
            )));
        }
        Ok(spec)
    }

    /// `E_M`: no forced positions.
    pub fn bounded(m: u32) -> Result<Self> {
        Self::check_common(m, 1.0)?;
        Ok(ConstructionSpec {
            m,
            alpha: 1.0,
            kind: Kind::Bounded,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn flavor(&self) -> Flavor {
        match self.kind {
            Kind::F { .. } => Flavor::F,
            Kind::E { .. } => Flavor::E,
            Kind::Bounded => Flavor::Bounded,
        }
    }

    pub fn nk(&self) -> Option<&SparseIndexSequence> {
        match &self.kind {
            Kind::F { nk } => Some(nk),
            _ => None,
        }
    }

    /// Largest position whose digit range is determined by the materialized
    /// sequence. Any extension obeying `n_{K+1} > (K+1)(n1 + ... + nK)` leaves
    /// every position up to `(K+1)(n1 + ... + nK)` free past `nK`.
    pub fn horizon(&self) -> u64 {
        match &self.kind {
            Kind::F { nk } => {
                let sum: u64 = nk.positions.iter().sum();
                (nk.len() as u64 + 1).saturating_mul(sum)
            }
            _ => u64::MAX,
        }
    }

    /// `n_k^r` for `n_k = k^t`, with an exact path when `t·r` is an integer.
    fn e_nk_pow_r(k: u64, r: f64, t: u32) -> f64 {
        let tr = f64::from(t) * r;
        if (tr - tr.round()).abs() < 1e-12 {
            if let Some(v) = k.checked_pow(tr.round() as u32) {
                return v as f64;
            }
        }
        (k as f64).powf(tr)
    }

    fn e_forced_digit(&self, k: u64) -> u64 {
        match self.kind {
            Kind::E { r, t } => (self.alpha * Self::e_nk_pow_r(k, r, t)).floor() as u64,
            _ => 0,
        }
    }

    /// `k` when `pos = n_k`.
    pub fn special_index(&self, pos: u64) -> Result<Option<u64>> {
        if pos == 0 {
            return Err(Error::Precondition("positions start at 1".into()));
        }
        match &self.kind {
            Kind::F { nk } => {
                if pos > self.horizon() {
                    return Err(Error::InvalidSpec(format!(
                        "position {pos} lies beyond the materialized horizon {}; add n_k terms",
                        self.horizon()
                    )));
                }
                Ok(nk.index_of(pos))
            }
            Kind::E { t, .. } => Ok(integer_root(pos, *t)),
            Kind::Bounded => Ok(None),
        }
    }

    pub fn digit_range(&self, pos: u64) -> Result<DigitRange> {
        let special = self.special_index(pos)?;
        let (lo, hi) = match (special, &self.kind) {
            (None, _) => (1, self.m),
            (Some(k), Kind::F { .. }) => (
                to_digit(floor_mul(self.alpha, pos) + 1, "forced digit")?,
                to_digit(floor_mul_frac(self.alpha, k, pos), "forced digit")?,
            ),
            (Some(k), _) => {
                let d = to_digit(self.e_forced_digit(k), "forced digit")?;
                (d, d)
            }
        };
        Ok(DigitRange { lo, hi, special })
    }

    /// Digit ranges at positions `1..=n`.
    pub fn ranges(&self, n: u64) -> Result<Vec<DigitRange>> {
        (1..=n).map(|p| self.digit_range(p)).collect()
    }

    /// `(k, n_k)` for every special position `<= n`.
    pub fn special_positions(&self, n: u64) -> Vec<(u64, u64)> {
        match &self.kind {
            Kind::F { nk } => nk
                .positions
                .iter()
                .enumerate()
                .take_while(|(_, &p)| p <= n)
                .map(|(i, &p)| (i as u64 + 1, p))
                .collect(),
            Kind::E { t, .. } => (1u64..)
                .map_while(|k| k.checked_pow(*t).filter(|&p| p <= n).map(|p| (k, p)))
                .collect(),
            Kind::Bounded => Vec::new(),
        }
    }

    /// Rejects words with a digit outside its admissible range.
    pub fn check_word(&self, word: &DigitWord) -> Result<()> {
        for (i, &d) in word.digits().iter().enumerate() {
            let r = self.digit_range(i as u64 + 1)?;
            if !r.contains(d) {
                return Err(Error::InadmissibleWord {
                    word: word.to_string(),
                    reason: format!("digit {d} at position {} outside {}..={}", i + 1, r.lo, r.hi),
                });
            }
        }
        Ok(())
    }

    /// Serializes to the `key=value` form accepted by [`FromStr`].
    pub fn to_kv(&self) -> String {
        let mut out = format!("flavor={}\nM={}\n", self.flavor(), self.m);
        match &self.kind {
            Kind::F { nk } => {
                out += &format!("alpha={}\n", self.alpha);
                let list: Vec<String> = nk.positions.iter().map(u64::to_string).collect();
                out += &format!("nk={}\n", list.join(","));
            }
            Kind::E { r, t } => out += &format!("alpha={}\nr={r}\nt={t}\n", self.alpha),
            Kind::Bounded => {}
        }
        out
    }
}

/// `k` with `k^t = n`, if any.
fn integer_root(n: u64, t: u32) -> Option<u64> {
    if t == 1 {
        return Some(n);
    }
    let guess = (n as f64).powf(1.0 / f64::from(t)).round() as u64;
    (guess.saturating_sub(1)..=guess + 1).find(|&k| k.checked_pow(t) == Some(n))
}

/// Parses `key=value` lines; `#` starts a comment.
///
/// Keys: `flavor` (`F`, `E` or `bounded`), `M`, `alpha`, and for F either
/// `nk` (comma-separated positions), `K` (number of greedy terms) or
/// `horizon` (greedy terms covering that rank); for E `r` and `t`.
impl FromStr for ConstructionSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut flavor = None;
        let (mut m, mut alpha, mut r, mut t) = (None, None, None, None);
        let (mut nk, mut terms, mut horizon) = (None, None, None);
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(raw, "expected key=value"))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| v.parse::<f64>().map_err(|_| Error::parse(raw, "expected a number"));
            let int = |v: &str| v.parse::<u64>().map_err(|_| Error::parse(raw, "expected an integer"));
            match key {
                "flavor" => {
                    flavor = Some(match value {
                        "F" | "f" => Flavor::F,
                        "E" | "e" => Flavor::E,
                        "bounded" | "E_M" => Flavor::Bounded,
                        _ => return Err(Error::parse(raw, "flavor must be F, E or bounded")),
                    })
                }
                "M" | "m" => m = Some(int(value)?),
                "alpha" => alpha = Some(num(value)?),
                "r" => r = Some(num(value)?),
                "t" => t = Some(int(value)?),
                "K" | "k" => terms = Some(int(value)?),
                "horizon" => horizon = Some(int(value)?),
                "nk" => nk = Some(value.split(',').map(|p| int(p.trim())).collect::<Result<Vec<u64>>>()?),
                _ => return Err(Error::parse(raw, format!("unknown key {key:?}"))),
            }
        }
        let flavor = flavor.ok_or_else(|| Error::InvalidSpec("missing flavor".into()))?;
        let m = m.ok_or_else(|| Error::InvalidSpec("missing M".into()))?;
        let m = u32::try_from(m).map_err(|_| Error::InvalidSpec("M too large".into()))?;
        let need_alpha = || alpha.ok_or_else(|| Error::InvalidSpec("missing alpha".into()));
        match flavor {
            Flavor::Bounded => ConstructionSpec::bounded(m),
            Flavor::E => {
                let r = r.ok_or_else(|| Error::InvalidSpec("missing r".into()))?;
                let t = t.ok_or_else(|| Error::InvalidSpec("missing t".into()))?;
                let t = u32::try_from(t).map_err(|_| Error::InvalidSpec("t too large".into()))?;
                ConstructionSpec::e_flavor(m, r, need_alpha()?, t)
            }
            Flavor::F => {
                let alpha = need_alpha()?;
                match (nk, terms, horizon) {
                    (Some(list), None, None) => ConstructionSpec::f_flavor(m, alpha, SparseIndexSequence::new(list)?),
                    (None, Some(k), None) => ConstructionSpec::f_flavor_greedy(m, alpha, k as usize),
                    (None, None, Some(h)) => ConstructionSpec::f_flavor_covering(m, alpha, h),
                    (None, None, None) => ConstructionSpec::f_flavor_greedy(m, alpha, 8),
                    _ => Err(Error::InvalidSpec("give only one of nk, K, horizon".into())),
                }
            }
        }
    }
}

// ---------------------------------------------------------------- words

/// `|D_n|`: the product of the range widths at positions `1..=n`.
pub fn count_words(spec: &ConstructionSpec, n: u64) -> Result<BigUint> {
    let mut total = BigUint::one();
    for r in spec.ranges(n)? {
        total *= r.width();
    }
    Ok(total)
}

/// Lexicographic enumeration of `D_n`, stopping after `budget` words.
#[derive(Clone, Debug)]
pub struct WordEnumerator {
    ranges: Vec<DigitRange>,
    current: Option<Vec<u32>>,
    budget: usize,
    emitted: usize,
    truncated: bool,
}

impl WordEnumerator {
    /// True once the budget stopped the enumeration before `D_n` was exhausted.
    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn emitted(&self) -> usize {
        self.emitted
    }

    fn advance(&mut self) {
        let Some(digits) = self.current.as_mut() else {
            return;
        };
        for i in (0..digits.len()).rev() {
            if digits[i] < self.ranges[i].hi {
                digits[i] += 1;
                return;
            }
            digits[i] = self.ranges[i].lo;
        }
        self.current = None;
    }
}

impl Iterator for WordEnumerator {
    type Item = DigitWord;

    fn next(&mut self) -> Option<DigitWord> {
        let word = self.current.clone()?;
        if self.emitted == self.budget {
            self.truncated = true;
            self.current = None;
            return None;
        }
        self.emitted += 1;
        self.advance();
        Some(DigitWord::from_vec_unchecked(word))
    }
}

pub fn enumerate_words(spec: &ConstructionSpec, n: u64, budget: usize) -> Result<WordEnumerator> {
    let ranges = spec.ranges(n)?;
    let first = ranges.iter().map(|r| r.lo).collect();
    Ok(WordEnumerator {
        ranges,
        current: Some(first),
        budget,
        emitted: 0,
        truncated: false,
    })
}

/// Errors with [`Error::Truncated`] unless all of `D_n` fits the budget.
fn ensure_within_budget(spec: &ConstructionSpec, n: u64, budget: usize) -> Result<BigUint> {
    let count = count_words(spec, n)?;
    if count > BigUint::from(budget) {
        return Err(Error::Truncated {
            rank: n as usize,
            budget,
        });
    }
    Ok(count)
}

/// Calls `visit(digits, digit_sum)` for every word of `D_n` in lex order.
fn for_each_word(ranges: &[DigitRange], mut visit: impl FnMut(&[u32], u64)) {
    let n = ranges.len();
    let mut digits: Vec<u32> = ranges.iter().map(|r| r.lo).collect();
    let mut sum: u64 = digits.iter().map(|&d| u64::from(d)).sum();
    loop {
        visit(&digits, sum);
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if digits[i] < ranges[i].hi {
                digits[i] += 1;
                sum += 1;
                break;
            }
            sum -= u64::from(digits[i] - ranges[i].lo);
            digits[i] = ranges[i].lo;
        }
    }
}

// ---------------------------------------------------------------- intervals

/// `J(w)`: the union of the admissible child cylinders of the word `w`.
#[derive(Clone, Debug, PartialEq)]
pub struct FundamentalInterval {
    pub word: DigitWord,
    pub digit_sum: u64,
    /// admissible digits at position `n + 1`
    pub next: DigitRange,
    pub left: Dyadic,
    pub right: Dyadic,
    pub length: Dyadic,
}

/// `2^-S (2^-(lo-1) - 2^-hi)`.
fn interval_length(digit_sum: u64, next: &DigitRange) -> Dyadic {
    let lo = u64::from(next.lo);
    let hi = u64::from(next.hi);
    // 2^-(S+lo-1) - 2^-(S+hi) = (2^(hi-lo+1) - 1) / 2^(S+hi)
    let num = (BigUint::one() << (hi - lo + 1)) - 1u32;
    Dyadic::new(num, digit_sum + hi)
}

pub fn fundamental_interval(spec: &ConstructionSpec, word: &DigitWord) -> Result<FundamentalInterval> {
    spec.check_word(word)?;
    let n = word.len() as u64;
    let next = spec.digit_range(n + 1)?;
    let s = word.digit_sum();
    let base = partial_sum(word.digits());
    let left = &base + &Dyadic::pow2_neg(s + u64::from(next.hi));
    let right = &base + &Dyadic::pow2_neg(s + u64::from(next.lo) - 1);
    let length = interval_length(s, &next);
    debug_assert_eq!(right.checked_sub(&left).as_ref(), Some(&length));
    Ok(FundamentalInterval {
        word: word.clone(),
        digit_sum: s,
        next,
        left,
        right,
        length,
    })
}

/// `Σ |I_{n+1}(w c)|` over admissible `c`, summed cylinder by cylinder.
pub fn child_cylinder_mass(spec: &ConstructionSpec, word: &DigitWord) -> Result<Dyadic> {
    spec.check_word(word)?;
    let next = spec.digit_range(word.len() as u64 + 1)?;
    let s = word.digit_sum();
    let mut total = Dyadic::zero();
    for c in next.lo..=next.hi {
        total = &total + &Dyadic::pow2_neg(s + u64::from(c));
    }
    Ok(total)
}

/// Outcome of the nearest-neighbour gap check at one rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rank: u64,
    pub intervals: u64,
    pub neighbour_pairs: u64,
    /// intervals whose nearest gap is below `2^-(S + hi(n+1))`
    pub violations: u64,
    /// neighbours that overlap or appear out of order
    pub order_violations: u64,
    /// `min log2(gap)` over all neighbour pairs
    pub min_gap_log2: Option<f64>,
    /// `min log2(gap / bound)` over intervals with a neighbour
    pub min_margin_log2: Option<f64>,
    pub all_bounds_hold: bool,
}

/// Checks every rank-`n` fundamental interval against its same-rank
/// neighbours: `gap >= 2^-(S + M)` when `n + 1` is free and
/// `gap >= 2^-S · 2^-⌊(1+1/k) α n_k⌋` when `n + 1 = n_k`.
///
/// Lexicographic word order lists the intervals from right to left; that
/// order is verified exactly while streaming, so neighbours are adjacent in
/// the stream and no sort buffer is needed.
pub fn gaps_at_rank(spec: &ConstructionSpec, n: u64, budget: usize) -> Result<GapReport> {
    ensure_within_budget(spec, n, budget)?;
    let ranges = spec.ranges(n)?;
    let next = spec.digit_range(n + 1)?;
    let hi = u64::from(next.hi);
    let lo = u64::from(next.lo);
    let max_sum: u64 = ranges.iter().map(|r| u64::from(r.hi)).sum();
    // all endpoints are integers over 2^e
    let e = max_sum + hi;

    struct Seen {
        left: BigUint,
        right: BigUint,
        bound_exp: u64,
        right_gap: Option<BigUint>,
    }
    let mut report = GapReport {
        rank: n,
        intervals: 0,
        neighbour_pairs: 0,
        violations: 0,
        order_violations: 0,
        min_gap_log2: None,
        min_margin_log2: None,
        all_bounds_hold: true,
    };
    let mut prefix: Vec<BigUint> = Vec::new();
    let mut prev: Option<Seen> = None;

    let judge = |seen: &Seen, left_gap: Option<&BigUint>, report: &mut GapReport| {
        let gap = match (left_gap, seen.right_gap.as_ref()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        if let Some(g) = gap {
            let bound = BigUint::one() << (e - seen.bound_exp);
            if *g < bound {
                report.violations += 1;
            }
            let margin = if g.is_zero() {
                f64::NEG_INFINITY
            } else {
                log2_biguint(g) - log2_biguint(&bound)
            };
            report.min_margin_log2 = Some(report.min_margin_log2.map_or(margin, |m: f64| m.min(margin)));
        }
    };

    for_each_word(&ranges, |digits, s| {
        // endpoints over 2^e, rebuilt from the digits
        prefix.clear();
        let mut acc = BigUint::zero();
        let mut run = 0u64;
        for &d in digits {
            run += u64::from(d);
            acc += BigUint::one() << (e - run);
        }
        prefix.push(acc);
        let base = &prefix[0];
        let left = base + (BigUint::one() << (e - s - hi));
        let right = base + (BigUint::one() << (e - s - lo + 1));
        let cur = Seen {
            left,
            right,
            bound_exp: s + hi,
            right_gap: None,
        };
        report.intervals += 1;
        let cur = match prev.take() {
            None => cur,
            Some(p) => {
                report.neighbour_pairs += 1;
                // the previous interval lies to the right of this one
                let gap = if cur.right <= p.left {
                    let g = &p.left - &cur.right;
                    let g_log2 = if g.is_zero() {
                        f64::NEG_INFINITY
                    } else {
                        log2_biguint(&g) - e as f64
                    };
                    report.min_gap_log2 = Some(report.min_gap_log2.map_or(g_log2, |m: f64| m.min(g_log2)));
                    g
                } else {
                    report.order_violations += 1;
                    BigUint::zero()
                };
                judge(&p, Some(&gap), &mut report);
                Seen {
                    right_gap: Some(gap),
                    ..cur
                }
            }
        };
        prev = Some(cur);
    });
    if let Some(p) = prev {
        judge(&p, None, &mut report);
    }
    report.all_bounds_hold = report.violations == 0 && report.order_violations == 0;
    Ok(report)
}

// ---------------------------------------------------------------- measure

/// `μ(J(w))` in log space with the exact range-width factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuMeasureValue {
    pub log2_value: f64,
    /// `⌊(1+1/j) α n_j⌋ - ⌊α n_j⌋` for every special `n_j <= n`
    pub width_factors: Vec<u32>,
    pub free_positions: u64,
    pub free_digit_sum: u64,
    /// the exponent `s_M(α)`
    pub exponent: f64,
}

impl MuMeasureValue {
    pub fn value(&self) -> f64 {
        self.log2_value.exp2()
    }

    pub fn width_product(&self) -> BigUint {
        self.width_factors.iter().fold(BigUint::one(), |acc, &w| acc * w)
    }
}

/// The mass distribution on `F_M(α)`: each forced range splits mass evenly,
/// a free digit `σ` carries the factor `2^-(α+σ)s` with `s = s_M(α)`.
#[derive(Clone, Debug)]
pub struct MuMeasure<'a> {
    spec: &'a ConstructionSpec,
    s: f64,
}

impl<'a> MuMeasure<'a> {
    pub fn new(spec: &'a ConstructionSpec) -> Result<Self> {
        if spec.flavor() != Flavor::F {
            return Err(Error::WrongFlavor { expected: "F" });
        }
        let s = solve_s_m_alpha(spec.m, spec.alpha)?.root;
        Ok(MuMeasure { spec, s })
    }

    pub fn exponent(&self) -> f64 {
        self.s
    }

    pub fn value(&self, word: &DigitWord) -> Result<MuMeasureValue> {
        self.spec.check_word(word)?;
        let ranges = self.spec.ranges(word.len() as u64)?;
        Ok(self.value_unchecked(word.digits(), &ranges))
    }

    fn value_unchecked(&self, digits: &[u32], ranges: &[DigitRange]) -> MuMeasureValue {
        let mut widths = Vec::new();
        let (mut free, mut free_sum) = (0u64, 0u64);
        for (&d, r) in digits.iter().zip(ranges) {
            if r.special.is_some() {
                widths.push(r.width());
            } else {
                free += 1;
                free_sum += u64::from(d);
            }
        }
        let product = widths.iter().fold(BigUint::one(), |acc, &w| acc * w);
        let log2 = -log2_biguint(&product) - self.s * (self.spec.alpha * free as f64 + free_sum as f64);
        MuMeasureValue {
            log2_value: log2,
            width_factors: widths,
            free_positions: free,
            free_digit_sum: free_sum,
            exponent: self.s,
        }
    }
}

pub fn mu_measure(spec: &ConstructionSpec, word: &DigitWord) -> Result<MuMeasureValue> {
    MuMeasure::new(spec)?.value(word)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureAxioms {
    pub rank1_total: f64,
    /// parents checked at ranks `0..max_rank`
    pub max_rank: u64,
    pub parents_checked: u64,
    /// `max |Σ_children μ / μ(parent) - 1|`
    pub max_additivity_error: f64,
}

impl MeasureAxioms {
    pub fn holds(&self, tol: f64) -> bool {
        (self.rank1_total - 1.0).abs() <= tol && self.max_additivity_error <= tol
    }
}

/// Rank-1 total mass and parent/child additivity for every parent of rank
/// `< max_rank`, each child recomputed from the closed form.
pub fn measure_axioms(spec: &ConstructionSpec, max_rank: u64, budget: usize) -> Result<MeasureAxioms> {
    let mu = MuMeasure::new(spec)?;
    ensure_within_budget(spec, max_rank.max(1), budget)?;
    let ranges = spec.ranges(max_rank.max(1))?;
    let rank1_total: f64 = (ranges[0].lo..=ranges[0].hi)
        .map(|d| mu.value_unchecked(&[d], &ranges[..1]).value())
        .sum();
    let mut worst: f64 = 0.0;
    let mut parents = 0u64;
    let mut child = Vec::new();
    for n in 0..max_rank {
        let n = n as usize;
        let next = ranges[n];
        for_each_word(&ranges[..n], |digits, _| {
            parents += 1;
            let parent = mu.value_unchecked(digits, &ranges[..n]).log2_value;
            child.clear();
            child.extend_from_slice(digits);
            child.push(0);
            let mut total = 0.0;
            for c in next.lo..=next.hi {
                child[n] = c;
                total += (mu.value_unchecked(&child, &ranges[..=n]).log2_value - parent).exp2();
            }
            worst = worst.max((total - 1.0).abs());
        });
    }
    Ok(MeasureAxioms {
        rank1_total,
        max_rank,
        parents_checked: parents,
        max_additivity_error: worst,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRank {
    pub rank: u64,
    pub intervals: u64,
    /// `log2 max μ(J) / |J|^((1-ε) s)`
    pub log2_c_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub epsilon: f64,
    pub exponent: f64,
    pub ranks: Vec<HolderRank>,
    /// largest `log2 C*` over the lower half of the tested ranks
    pub fitted_log2_bound: f64,
    /// largest `log2 C*` over the upper half
    pub upper_log2_max: f64,
    pub pass: bool,
    /// `ε = 0` is outside the bound's hypotheses; failure is expected there
    pub expected_failure_mode: bool,
}

/// `C*(n) = max μ(J) / |J|^((1-ε) s)` over rank-`n` intervals for `n` in
/// `1..=max_rank`. Passes when no rank in the upper half exceeds twice the
/// largest value seen in the lower half.
pub fn holder_check(spec: &ConstructionSpec, max_rank: u64, epsilon: f64, budget: usize) -> Result<HolderReport> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Precondition(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    if max_rank == 0 {
        return Err(Error::Precondition("max_rank must be >= 1".into()));
    }
    let mu = MuMeasure::new(spec)?;
    ensure_within_budget(spec, max_rank, budget)?;
    let exponent = (1.0 - epsilon) * mu.exponent();
    let all = spec.ranges(max_rank + 1)?;
    let mut ranks = Vec::new();
    for n in 1..=max_rank as usize {
        let ranges = &all[..n];
        let next = all[n];
        let tail = (-f64::from(next.width())).exp2();
        let shape = -(f64::from(next.lo) - 1.0) + (-tail).ln_1p() / std::f64::consts::LN_2;
        let mut best = f64::NEG_INFINITY;
        let mut count = 0u64;
        for_each_word(ranges, |digits, s| {
            count += 1;
            let log2_len = -(s as f64) + shape;
            let v = mu.value_unchecked(digits, ranges).log2_value - exponent * log2_len;
            best = best.max(v);
        });
        ranks.push(HolderRank {
            rank: n as u64,
            intervals: count,
            log2_c_star: best,
        });
    }
    let half = ranks.len().div_ceil(2);
    let fitted = ranks[..half]
        .iter()
        .map(|r| r.log2_c_star)
        .fold(f64::NEG_INFINITY, f64::max);
    let upper = ranks[half..]
        .iter()
        .map(|r| r.log2_c_star)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(HolderReport {
        epsilon,
        exponent,
        pass: upper <= fitted + 1.0,
        fitted_log2_bound: fitted,
        upper_log2_max: upper,
        ranks,
        expected_failure_mode: epsilon == 0.0,
    })
}

// ---------------------------------------------------------------- counting

/// `(j, N(j))` for `j = 0..=j_max`, where `N(j)` counts admissible words of
/// any rank with digit sum `j`.
pub fn count_cylinders_by_length(spec: &ConstructionSpec, j_max: usize) -> Result<Vec<(u64, BigUint)>> {
    if j_max > 4000 {
        return Err(Error::Precondition(format!("j_max must be <= 4000, got {j_max}")));
    }
    let mut f: Vec<BigUint> = vec![BigUint::zero(); j_max + 1];
    f[0] = BigUint::one();
    let mut total = f.clone();
    // nonzero support of f
    let (mut lo_j, mut hi_j) = (0usize, 0usize);
    let mut pos = 1u64;
    loop {
        let r = spec.digit_range(pos)?;
        let (dlo, dhi) = (r.lo as usize, r.hi as usize);
        let new_lo = lo_j + dlo;
        if new_lo > j_max {
            break;
        }
        let new_hi = (hi_j + dhi).min(j_max);
        // prefix[i] = Σ_{j < i} f[j] over the support
        let mut prefix = Vec::with_capacity(hi_j - lo_j + 2);
        prefix.push(BigUint::zero());
        for v in &f[lo_j..=hi_j] {
            let next = &prefix[prefix.len() - 1] + v;
            prefix.push(next);
        }
        let mut g = vec![BigUint::zero(); j_max + 1];
        for (j, slot) in g.iter_mut().enumerate().take(new_hi + 1).skip(new_lo) {
            // Σ_{c=dlo}^{dhi} f[j-c] over j-c in [lo_j, hi_j]
            let a = j.saturating_sub(dhi).max(lo_j);
            let b = (j - dlo).min(hi_j);
            if a <= b {
                *slot = &prefix[b - lo_j + 1] - &prefix[a - lo_j];
            }
        }
        for j in new_lo..=new_hi {
            total[j] += &g[j];
        }
        f = g;
        lo_j = new_lo;
        hi_j = new_hi;
        pos += 1;
    }
    Ok(total.into_iter().enumerate().map(|(j, n)| (j as u64, n)).collect())
}

/// `N(j)` by brute force over ranks `0..=j`; for cross-checking the DP.
pub fn count_cylinders_brute_force(spec: &ConstructionSpec, j_max: usize) -> Result<Vec<BigUint>> {
    let mut counts = vec![BigUint::zero(); j_max + 1];
    fn rec(spec: &ConstructionSpec, pos: u64, sum: usize, j_max: usize, counts: &mut [BigUint]) -> Result<()> {
        counts[sum] += 1u32;
        let r = spec.digit_range(pos)?;
        for d in r.lo..=r.hi {
            let next = sum + d as usize;
            if next > j_max {
                break;
            }
            rec(spec, pos + 1, next, j_max, counts)?;
        }
        Ok(())
    }
    rec(spec, 1, 0, j_max, &mut counts)?;
    Ok(counts)
}

// ---------------------------------------------------------------- points

/// A point of `E_M(r, α)` built to length `N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EPoint {
    #[serde(skip)]
    pub word: DigitWord,
    #[serde(skip)]
    pub trajectory: MaxDigitTrajectory,
    pub horizon: u64,
    pub r: f64,
    pub alpha: f64,
    /// last `k` with `n_k <= N`
    pub last_k: u64,
    pub last_nk: u64,
    pub l_n: u32,
    /// `L_N / N^r`
    pub ratio: f64,
    /// `(n_{k+1}^r - n_k^r) / n_k^r`
    pub sandwich_bound: f64,
    pub holds: bool,
}

impl EPoint {
    /// `L_n / n^r` for `n = 1..=N`.
    pub fn ratios(&self) -> impl Iterator<Item = f64> + '_ {
        let r = self.r;
        self.trajectory
            .values()
            .iter()
            .enumerate()
            .map(move |(i, &l)| f64::from(l) / ((i + 1) as f64).powf(r))
    }

    /// True when `L_n` only changes at special positions from `n_{k0}` on.
    pub fn constant_between_specials_from(&self, k0: u64, t: u32) -> bool {
        let start = k0.pow(t) as usize;
        let l = self.trajectory.values();
        (start.max(1)..l.len()).all(|i| {
            let n = i as u64 + 1;
            l[i] == l[i - 1] || integer_root(n, t).is_some()
        })
    }
}

/// Builds the word of length `n` in `E_M(r, α)` with every free digit equal
/// to `fill` and checks `|L_N / N^r - α| <= (n_{k+1}^r - n_k^r) / n_k^r`.
pub fn construct_e_point(r: f64, alpha: f64, m: u32, t: u32, n: u64, fill: u32) -> Result<EPoint> {
    let spec = ConstructionSpec::e_flavor(m, r, alpha, t)?;
    if n == 0 {
        return Err(Error::Precondition("N must be >= 1".into()));
    }
    if !(1..=m).contains(&fill) {
        return Err(Error::Precondition(format!("fill digit must lie in 1..={m}")));
    }
    let mut digits = vec![fill; n as usize];
    let specials = spec.special_positions(n);
    for &(k, p) in &specials {
        digits[p as usize - 1] = to_digit(spec.e_forced_digit(k), "forced digit")?;
    }
    let (last_k, last_nk) = *specials.last().expect("n_1 = 1 is always special");
    let trajectory = crate::sampler::ln_trajectory(digits.iter().copied(), n as usize)?;
    let l_n = trajectory.last().unwrap_or(0);
    let ratio = f64::from(l_n) / (n as f64).powf(r);
    let lo = ConstructionSpec::e_nk_pow_r(last_k, r, t);
    let hi = ConstructionSpec::e_nk_pow_r(last_k + 1, r, t);
    let bound = (hi - lo) / lo;
    Ok(EPoint {
        word: DigitWord::from_vec_unchecked(digits),
        trajectory,
        horizon: n,
        r,
        alpha,
        last_k,
        last_nk,
        l_n,
        ratio,
        sandwich_bound: bound,
        holds: (ratio - alpha).abs() <= bound,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpecialDigitChoice {
    Min,
    #[default]
    Max,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupEntry {
    pub k: u64,
    pub nk: u64,
    pub digit: u32,
    /// `d_{n_k} / n_k`
    pub ratio: f64,
    /// `L_{n_k} / n_k`
    pub running_max_ratio: f64,
    pub upper: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimsupReport {
    pub alpha: f64,
    pub horizon: u64,
    pub choice: SpecialDigitChoice,
    pub entries: Vec<LimsupEntry>,
    pub max_ratio: f64,
    /// `α(1 + 1/k_min)`
    pub max_ratio_upper: f64,
    pub ratios_decreasing: bool,
    /// largest `d_n / n` over free positions in `(N/2, N]`
    pub free_tail_ratio: f64,
    pub pass: bool,
}

/// Builds a word of `F_M(α)` to length `n` and checks
/// `α < d_{n_k} / n_k <= α(1 + 1/k)` at every special position.
pub fn limsup_point_check(
    spec: &ConstructionSpec,
    n: u64,
    choice: SpecialDigitChoice,
    fill: u32,
) -> Result<LimsupReport> {
    if spec.flavor() != Flavor::F {
        return Err(Error::WrongFlavor { expected: "F" });
    }
    if !(1..=spec.m).contains(&fill) {
        return Err(Error::Precondition(format!("fill digit must lie in 1..={}", spec.m)));
    }
    let ranges = spec.ranges(n)?;
    let digits: Vec<u32> = ranges
        .iter()
        .map(|r| match (r.special, choice) {
            (None, _) => fill,
            (Some(_), SpecialDigitChoice::Min) => r.lo,
            (Some(_), SpecialDigitChoice::Max) => r.hi,
        })
        .collect();
    let alpha = spec.alpha;
    let mut entries = Vec::new();
    let mut running = 0u32;
    let mut next_special = 0usize;
    let specials = spec.special_positions(n);
    for (i, &d) in digits.iter().enumerate() {
        running = running.max(d);
        let p = i as u64 + 1;
        if let Some(&(k, nk)) = specials.get(next_special) {
            if nk == p {
                next_special += 1;
                let ratio = f64::from(d) / p as f64;
                let upper = alpha * (1.0 + 1.0 / k as f64);
                entries.push(LimsupEntry {
                    k,
                    nk,
                    digit: d,
                    ratio,
                    running_max_ratio: f64::from(running) / p as f64,
                    upper,
                    holds: ratio > alpha && ratio <= upper,
                });
            }
        }
    }
    let max_ratio = entries.iter().map(|e| e.ratio).fold(f64::NEG_INFINITY, f64::max);
    let k_min = entries.first().map_or(1, |e| e.k);
    let max_upper = alpha * (1.0 + 1.0 / k_min as f64);
    let decreasing = entries.windows(2).all(|w| w[1].ratio < w[0].ratio);
    let free_tail_ratio = digits
        .iter()
        .enumerate()
        .filter(|(i, _)| ranges[*i].special.is_none() && (*i as u64 + 1) * 2 > n)
        .map(|(i, &d)| f64::from(d) / (i + 1) as f64)
        .fold(0.0, f64::max);
    let pass = !entries.is_empty() && entries.iter().all(|e| e.holds) && max_ratio > alpha && max_ratio <= max_upper;
    Ok(LimsupReport {
        alpha,
        horizon: n,
        choice,
        entries,
        max_ratio,
        max_ratio_upper: max_upper,
        ratios_decreasing: decreasing,
        free_tail_ratio,
        pass,
    })
}

// ---------------------------------------------------------------- dumps

/// Writes `word,left,right,length,mu,log2_mu` for every rank-`n` fundamental
/// interval; `mu` columns are empty outside the F flavor.
pub fn write_cylinder_csv<W: Write>(spec: &ConstructionSpec, n: u64, budget: usize, out: W) -> Result<()> {
    ensure_within_budget(spec, n, budget)?;
    let mu = MuMeasure::new(spec).ok();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word", "left", "right", "length", "mu", "log2_mu"])?;
    for word in enumerate_words(spec, n, budget)? {
        let j = fundamental_interval(spec, &word)?;
        let (m, lm) = match &mu {
            Some(mu) => {
                let v = mu.value(&word)?;
                (v.value().to_string(), v.log2_value.to_string())
            }
            None => (String::new(), String::new()),
        };
        w.write_record([
            word.to_string(),
            j.left.to_string(),
            j.right.to_string(),
            j.length.to_string(),
            m,
            lm,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `log2 n` for counts too large for `f64`.
pub fn count_log2(n: &BigUint) -> f64 {
    log2_biguint(n)
}

/// A count as `f64`, saturating at `f64::MAX`.
pub fn count_to_f64(n: &BigUint) -> f64 {
    n.to_f64().unwrap_or(f64::MAX)
}
