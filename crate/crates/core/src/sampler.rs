//! Monte Carlo experiments on Lebesgue-random digit streams, each paired with
//! an exact oracle.

use num_bigint::BigUint;
use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::apply_t;
use crate::phi::{hit_probability_for_threshold, PhiSpec};
use crate::rational::RationalPoint;
use crate::report::{ExperimentReport, Table};
use crate::rng::{keyed_rng, sample_stream, DigitStream};
use crate::stats;
use rand_core::RngCore;

/// Below this many samples a digit-law report widens its frequency bands.
pub const SMALL_SAMPLE: u64 = 100_000;

/// Minimum expected count per chi-square cell.
const MIN_CELL: f64 = 5.0;

// ---------------------------------------------------------------- digit law

/// Chi-square checks of `P(d = k) = 2^-k` and of pair independence on the
/// first `k` digits of the stream for `seed`.
pub fn digit_law_test(seed: u64, k: u64, kmax: u32) -> Result<ExperimentReport> {
    if k < 10_000 {
        return Err(Error::Precondition(format!("digit law test needs K >= 10^4, got {k}")));
    }
    let digits = sample_stream(seed).take_vec(k as usize);
    digit_law_report(&digits, kmax, seed)
}

/// The digit-law statistics of an arbitrary digit sequence.
pub fn digit_law_report(digits: &[u32], kmax: u32, seed: u64) -> Result<ExperimentReport> {
    if kmax == 0 {
        return Err(Error::Precondition("kmax must be >= 1".into()));
    }
    if digits.len() < 2 {
        return Err(Error::Precondition("need at least two digits".into()));
    }
    let k = digits.len() as u64;
    let kf = k as f64;
    let small = k < SMALL_SAMPLE;
    let band = if small { 4.0 } else { 3.0 };

    let mut report = ExperimentReport::new("digit-law", seed, k, k);
    report.param("kmax", kmax);
    report.diagnostic("small_sample", small);
    report.diagnostic("band_sigmas", band);

    let mut counts = vec![0u64; kmax as usize + 2];
    for &d in digits {
        counts[(d.min(kmax + 1)) as usize] += 1;
    }
    let mut table = Table::new(["k", "oracle", "empirical", "tolerance"]);
    for j in 1..=kmax {
        let p = (-f64::from(j)).exp2();
        let f = counts[j as usize] as f64 / kf;
        let tol = band * stats::binomial_sigma(p, kf);
        report.pair(format!("freq[{j}]"), p, f, tol);
        table.push(vec![f64::from(j), p, f, tol]);
    }
    report.set_table(table);

    // marginal: cells 1..=c plus a pooled tail, each with expectation >= MIN_CELL
    let c = (1..=kmax)
        .take_while(|&j| kf * (-f64::from(j)).exp2() >= MIN_CELL)
        .last()
        .unwrap_or(1);
    let mut observed = vec![0f64; c as usize + 1];
    for &d in digits {
        observed[(d.min(c + 1) - 1) as usize] += 1.0;
    }
    let expected: Vec<f64> = (1..=c + 1)
        .map(|j| {
            if j <= c {
                kf * (-f64::from(j)).exp2()
            } else {
                kf * (-f64::from(c)).exp2()
            }
        })
        .collect();
    let marginal = stats::pearson(&observed, &expected);
    let marginal_p = stats::chi_square_p_value(marginal, c as usize);
    report.diagnostic("marginal_chi2", marginal);
    report.diagnostic("marginal_df", c);
    report.diagnostic("marginal_p", marginal_p);
    report.bound("marginal_p", marginal_p, 1e-3, 1.0);

    // independence on non-overlapping pairs (d_{2i-1}, d_{2i})
    let pairs = (k / 2) as f64;
    let cp = (1..=kmax)
        .take_while(|&j| pairs * (-2.0 * f64::from(j - 1)).exp2() >= MIN_CELL)
        .last()
        .unwrap_or(1)
        .max(2)
        .min(kmax.max(2));
    let mut table2 = vec![vec![0u64; cp as usize]; cp as usize];
    for pair in digits.chunks_exact(2) {
        let a = (pair[0].min(cp) - 1) as usize;
        let b = (pair[1].min(cp) - 1) as usize;
        table2[a][b] += 1;
    }
    let indep = stats::independence_test(&table2);
    report.diagnostic("pair_chi2", indep.statistic);
    report.diagnostic("pair_df", indep.df);
    report.diagnostic("pair_p", indep.p_value);
    report.bound("pair_p", indep.p_value, 1e-3, 1.0);

    let mean = digits.iter().map(|&d| f64::from(d)).sum::<f64>() / kf;
    report.pair("mean_digit", 2.0, mean, band * (2.0 / kf).sqrt());
    Ok(report)
}

// ------------------------------------------------------------- pushforward

/// KS distance from uniform of `T^iterations` applied to `k` uniform dyadic
/// points `u / 2^bits`, `u` in `1..=2^bits`. The fixed point 1 is excluded.
pub fn pushforward_uniformity_test(seed: u64, k: u64, bits: u32, iterations: u32) -> Result<ExperimentReport> {
    if bits == 0 || bits > 40 {
        return Err(Error::Precondition(format!(
            "resolution must be 1..=40 bits, got {bits}"
        )));
    }
    if k == 0 || iterations == 0 {
        return Err(Error::Precondition("need K >= 1 and at least one iteration".into()));
    }
    let mut rng = keyed_rng(seed, 0);
    let mut sample = Vec::with_capacity(k as usize);
    let mut excluded = 0u64;
    for _ in 0..k {
        let u = (rng.next_u64() >> (64 - bits)) + 1;
        if u == 1u64 << bits {
            excluded += 1;
            continue;
        }
        let mut x = RationalPoint::dyadic(u, u64::from(bits))?;
        for _ in 0..iterations {
            x = apply_t(&x);
        }
        sample.push(x.to_f64());
    }
    let n = sample.len() as f64;
    let d = stats::ks_uniform(&mut sample);
    let crit = stats::ks_critical_coefficient(1e-3) / n.sqrt();
    let mut report = ExperimentReport::new("pushforward", seed, k, u64::from(iterations));
    report.param("bits", bits).param("iterations", iterations);
    report.diagnostic("excluded_fixed_points", excluded);
    report.diagnostic("ks_critical", crit);
    report.pair("ks_distance", 0.0, d, crit);
    Ok(report)
}

// --------------------------------------------------------- Borel–Bernstein

/// Indices `n <= horizon` with `dn >= ⌈φ(n)⌉`.
pub fn bb_event_indices(digits: impl IntoIterator<Item = u32>, phi: &PhiSpec, horizon: u64) -> Result<Vec<u64>> {
    if horizon < 3 {
        return Err(Error::Precondition(format!("horizon must be >= 3, got {horizon}")));
    }
    let mut out = Vec::new();
    for (i, d) in digits.into_iter().take(horizon as usize).enumerate() {
        let n = i as u64 + 1;
        if d >= phi.threshold(n) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Exact hit probability of one dyadic window `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowOracle {
    pub j: u32,
    pub lo: u64,
    pub hi: u64,
    /// true when the window is not cut short by the horizon
    pub complete: bool,
    pub hit_probability: f64,
    pub expected_events: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbOracle {
    pub horizon: u64,
    pub expected_events: f64,
    pub event_variance: f64,
    pub windows: Vec<WindowOracle>,
    /// first complete window from which hit probabilities never increase
    pub monotone_from: Option<u32>,
}

/// Per-window and total oracles for the events `dn >= ⌈φ(n)⌉`, `n <= horizon`.
pub fn bb_oracle(phi: &PhiSpec, horizon: u64) -> BbOracle {
    let mut windows = Vec::new();
    let (mut total, mut var) = (0.0, 0.0);
    let mut j = 0u32;
    while (1u64 << j) <= horizon {
        let lo = 1u64 << j;
        let full_hi = (lo << 1) - 1;
        let hi = full_hi.min(horizon);
        let (mut log_miss, mut expected) = (0.0f64, 0.0f64);
        for n in lo..=hi {
            let p = phi.hit_probability(n);
            expected += p;
            var += p * (1.0 - p);
            log_miss += (-p).ln_1p();
        }
        total += expected;
        windows.push(WindowOracle {
            j,
            lo,
            hi,
            complete: hi == full_hi,
            hit_probability: -log_miss.exp_m1(),
            expected_events: expected,
        });
        j += 1;
    }
    let complete: Vec<&WindowOracle> = windows.iter().filter(|w| w.complete).collect();
    let mut monotone_from = complete.last().map(|w| w.j);
    for pair in complete.windows(2).rev() {
        if pair[1].hit_probability <= pair[0].hit_probability {
            monotone_from = Some(pair[0].j);
        } else {
            break;
        }
    }
    BbOracle {
        horizon,
        expected_events: total,
        event_variance: var,
        windows,
        monotone_from,
    }
}

/// A certified tail: `Σ_{n > n0} P(dn >= φ(n)) <= bound`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub n0: u64,
    pub bound: f64,
}

/// `log2` of the integrand of `∫ 2^(1-φ(x)) dx` after `x = exp(exp(v))`,
/// written in terms of `l = ln x`. The `log2 x` terms of `φ` and of the
/// Jacobian `x · l` are merged before evaluation to avoid cancellation.
fn log2_tail_integrand(phi: &PhiSpec, l: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let mut v = 1.0 - phi.c0 - (phi.b - 1.0) * l / ln2 + l.log2() - phi.c * l.max(1.0).log2();
    if phi.a != 0.0 {
        v -= phi.a * (phi.r * l).exp();
    }
    v
}

/// `dφ/dl` at `x = e^l`.
fn phi_slope_in_log(phi: &PhiSpec, l: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let mut s = phi.b / ln2;
    if l > 1.0 {
        s += phi.c / (l * ln2);
    }
    if phi.a != 0.0 {
        s += phi.a * phi.r * (phi.r * l).exp();
    }
    s
}

/// Upper bound on `∫_{n0}^∞ 2^(1-φ(x)) dx`, or `None` when the integral does
/// not converge numerically or `φ` decreases somewhere along the way.
///
/// For non-decreasing `φ` this integral dominates the tail sum of hit
/// probabilities past `n0`.
pub fn bb_tail_integral(phi: &PhiSpec, n0: f64) -> Option<f64> {
    if n0.is_nan() || n0 < 3.0 || !phi.tends_to_infinity() {
        return None;
    }
    const PANELS: usize = 64;
    let v0 = n0.ln().ln();
    let g = |v: f64| log2_tail_integrand(phi, v.exp()).exp2();
    let mut total = 0.0;
    let mut a = v0;
    while a < 700.0 {
        let b = a + 1.0;
        let h = (b - a) / PANELS as f64;
        let mut s = g(a) + g(b);
        for i in 1..PANELS {
            let x = a + i as f64 * h;
            if phi_slope_in_log(phi, x.exp()) < 0.0 {
                return None;
            }
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(x);
        }
        let chunk = s * h / 3.0;
        if !chunk.is_finite() {
            return None;
        }
        total += chunk;
        if g(b) <= g(a) && chunk <= 1e-17 * total {
            return Some(total);
        }
        a = b;
    }
    None
}

/// Smallest `n0` whose tail bound is at most `target`.
pub fn bb_find_n0(phi: &PhiSpec, target: f64) -> Option<TailBound> {
    let bound = |n: u64| bb_tail_integral(phi, n as f64);
    let mut hi = 4u64;
    loop {
        match bound(hi) {
            Some(b) if b <= target => break,
            Some(_) => {}
            None => return None,
        }
        hi = hi.checked_mul(2)?;
        if hi > (1u64 << 62) {
            return None;
        }
    }
    let mut lo = (hi / 2).max(3);
    if bound(lo).is_some_and(|b| b <= target) {
        return Some(TailBound {
            n0: lo,
            bound: bound(lo)?,
        });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if bound(mid).is_some_and(|b| b <= target) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(TailBound {
        n0: hi,
        bound: bound(hi)?,
    })
}

/// Mean event count and per-window hit fractions over `k` streams, each
/// compared with the exact oracle.
pub fn bb_experiment(
    phi: &PhiSpec,
    k: u64,
    horizon: u64,
    seed: u64,
    window_tolerance: f64,
) -> Result<ExperimentReport> {
    if k < 100 {
        return Err(Error::Precondition(format!("need K >= 100 streams, got {k}")));
    }
    if horizon < 3 {
        return Err(Error::Precondition(format!("horizon must be >= 3, got {horizon}")));
    }
    let oracle = bb_oracle(phi, horizon);
    let thresholds: Vec<u32> = (1..=horizon).map(|n| phi.threshold(n)).collect();
    let nwin = oracle.windows.len();

    let per_stream: Vec<(u64, Vec<bool>)> = (0..k)
        .into_par_iter()
        .map(|s| {
            let mut stream = DigitStream::new(seed, s);
            let mut hits = vec![false; nwin];
            let mut events = 0u64;
            for (i, &t) in thresholds.iter().enumerate() {
                if stream.next_digit() >= t {
                    events += 1;
                    let n = i as u64 + 1;
                    hits[(63 - n.leading_zeros()) as usize] = true;
                }
            }
            (events, hits)
        })
        .collect();

    let kf = k as f64;
    let mean = per_stream.iter().map(|(e, _)| *e as f64).sum::<f64>() / kf;
    let mut report = ExperimentReport::new("borel-bernstein", seed, k, horizon);
    report
        .param("phi", phi.to_string())
        .param("window_tolerance", window_tolerance);
    let sigma = (oracle.event_variance / kf).sqrt();
    report.pair("mean_events", oracle.expected_events, mean, (5.0 * sigma).max(1e-9));

    let mut table = Table::new(["j", "lo", "hi", "oracle_hit", "empirical_hit", "tolerance"]);
    for (w, win) in oracle.windows.iter().enumerate() {
        let f = per_stream.iter().filter(|(_, h)| h[w]).count() as f64 / kf;
        report.pair(format!("window[{}]", win.j), win.hit_probability, f, window_tolerance);
        table.push(vec![
            f64::from(win.j),
            win.lo as f64,
            win.hi as f64,
            win.hit_probability,
            f,
            window_tolerance,
        ]);
    }
    if let Some(last) = oracle.windows.last() {
        let f = per_stream.iter().filter(|(_, h)| h[nwin - 1]).count() as f64 / kf;
        report.pair("last_window", last.hit_probability, f, window_tolerance);
    }
    report.set_table(table);

    report.diagnostic("oracle_expected_events", oracle.expected_events);
    report.diagnostic("monotone_from", oracle.monotone_from);
    match bb_find_n0(phi, 0.1) {
        Some(tail) => {
            report.diagnostic("series", "convergent");
            report.diagnostic("n0", tail.n0);
            report.bound("tail_expectation_beyond_n0", tail.bound, 0.0, 0.1);
        }
        None => {
            report.diagnostic("series", "divergent");
        }
    }
    Ok(report)
}

// ------------------------------------------------------------- max digit

/// Running maxima `L1 <= L2 <= ... <= LN` of a digit prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDigitTrajectory(Vec<u32>);

impl MaxDigitTrajectory {
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    /// `Ln` for 1-based `n`.
    pub fn at(&self, n: usize) -> Option<u32> {
        n.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn ln_trajectory(digits: impl IntoIterator<Item = u32>, n: usize) -> Result<MaxDigitTrajectory> {
    if n == 0 {
        return Err(Error::Precondition("trajectory length must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut max = 0;
    for d in digits.into_iter().take(n) {
        max = max.max(d);
        out.push(max);
    }
    if out.len() < n {
        return Err(Error::Precondition(format!("stream ended after {} digits", out.len())));
    }
    Ok(MaxDigitTrajectory(out))
}

/// `P(Ln <= m) = (2^m - 1)^n / 2^(mn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactProbability {
    pub numerator: BigUint,
    /// the denominator is `2^denominator_log2`
    pub denominator_log2: u64,
}

impl ExactProbability {
    pub fn denominator(&self) -> BigUint {
        BigUint::one() << self.denominator_log2
    }

    pub fn to_f64(&self) -> f64 {
        crate::dyadic::Dyadic::new(self.numerator.clone(), self.denominator_log2).to_f64()
    }
}

pub fn ln_cdf_exact(n: u64, m: u32) -> Result<ExactProbability> {
    if n == 0 || m == 0 {
        return Err(Error::Precondition("need n >= 1 and m >= 1".into()));
    }
    let base = (BigUint::one() << m) - 1u32;
    let exp = u32::try_from(n).map_err(|_| Error::Precondition("n too large for exact power".into()))?;
    Ok(ExactProbability {
        numerator: base.pow(exp),
        denominator_log2: n * u64::from(m),
    })
}

/// `P(Ln <= m)` in floating point; 0 for `m = 0`.
pub fn ln_cdf(n: u64, m: u32) -> f64 {
    if m == 0 {
        return 0.0;
    }
    (n as f64 * (-(-f64::from(m)).exp2()).ln_1p()).exp()
}

/// Smallest `m` with `P(Ln <= m) >= q`.
pub fn ln_quantile(n: u64, q: f64) -> u32 {
    let mut m = 1;
    while ln_cdf(n, m) < q && m < 2048 {
        m += 1;
    }
    m
}

/// `E[Ln]` and `E[Ln^2]` by summing tail probabilities.
pub fn ln_moments(n: u64) -> (f64, f64) {
    let (mut e1, mut e2) = (0.0, 0.0);
    let mut m = 0u32;
    loop {
        let tail = 1.0 - ln_cdf(n, m);
        e1 += tail;
        e2 += f64::from(2 * m + 1) * tail;
        if tail < 1e-18 && m > 1 {
            break;
        }
        m += 1;
    }
    (e1, e2)
}

/// Law of `L_N` over `k` streams against the exact CDF.
pub fn max_digit_experiment(seed: u64, k: u64, horizon: u64) -> Result<ExperimentReport> {
    if k < 100 {
        return Err(Error::Precondition(format!("need K >= 100 streams, got {k}")));
    }
    if horizon < 10_000 {
        return Err(Error::Precondition(format!("horizon must be >= 10^4, got {horizon}")));
    }
    let mut maxima: Vec<u32> = (0..k)
        .into_par_iter()
        .map(|s| {
            let mut stream = DigitStream::new(seed, s);
            (0..horizon).map(|_| stream.next_digit()).max().unwrap_or(0)
        })
        .collect();
    maxima.sort_unstable();

    let kf = k as f64;
    let nf = horizon as f64;
    let log2n = nf.log2();
    let loglog = nf.ln().log2();
    let mut report = ExperimentReport::new("max-digit", seed, k, horizon);

    let (e1, e2) = ln_moments(horizon);
    let sd = (e2 - e1 * e1).max(0.0).sqrt();
    let mean = maxima.iter().map(|&m| f64::from(m)).sum::<f64>() / kf;
    report.pair("mean_L", e1, mean, 4.0 * sd / kf.sqrt());
    report.bound("mean_L_over_log2N", mean / log2n, 0.9, 1.2);
    report.diagnostic("oracle_mean_L_over_log2N", e1 / log2n);
    report.diagnostic("mean_centered_over_loglog", (mean - log2n) / loglog);
    report.diagnostic("oracle_mean_centered_over_loglog", (e1 - log2n) / loglog);

    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let delta = 3.0 * (q * (1.0 - q) / kf).sqrt();
        let lo = ln_quantile(horizon, (q - delta).max(0.0));
        let hi = ln_quantile(horizon, (q + delta).min(1.0));
        let emp = stats::quantile_sorted(&maxima, q);
        report.bound(format!("quantile[{q}]"), f64::from(emp), f64::from(lo), f64::from(hi));
    }
    let median = stats::quantile_sorted(&maxima, 0.5);
    report.bound(
        "median_in_oracle_iqr",
        f64::from(median),
        f64::from(ln_quantile(horizon, 0.25)),
        f64::from(ln_quantile(horizon, 0.75)),
    );

    let floor_m = log2n.floor() as u32;
    let ceil_m = log2n.ceil() as u32;
    let frac_le = |m: u32| maxima.iter().filter(|&&x| x <= m).count() as f64 / kf;
    report.pair("P(L<=floor(log2N))", ln_cdf(horizon, floor_m), frac_le(floor_m), 0.05);
    report.pair("P(L<=ceil(log2N))", ln_cdf(horizon, ceil_m), frac_le(ceil_m), 0.05);
    let inv_e_proxy = (nf * (-1.0 / nf).ln_1p()).exp();
    report.bound(
        "(1-1/N)^N_bracket",
        inv_e_proxy,
        ln_cdf(horizon, floor_m),
        ln_cdf(horizon, ceil_m),
    );
    report.diagnostic("(1-1/N)^N", inv_e_proxy);

    let lo_m = maxima.first().copied().unwrap_or(1).saturating_sub(1).max(1);
    let hi_m = maxima.last().copied().unwrap_or(1) + 1;
    let mut table = Table::new([
        "m",
        "oracle_cdf",
        "empirical_cdf",
        "L_over_log2N",
        "centered_over_loglog",
    ]);
    for m in lo_m..=hi_m {
        let mf = f64::from(m);
        table.push(vec![
            mf,
            ln_cdf(horizon, m),
            frac_le(m),
            mf / log2n,
            (mf - log2n) / loglog,
        ]);
    }
    report.set_table(table);
    Ok(report)
}

/// Outcome of checking `{Ln >= φ(n)} ⊂ {dm >= φ(m) for some m <= n}` on a prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GphiReport {
    pub holds: bool,
    pub horizon: u64,
    /// `(n, m)`: `Ln >= φ(n)` and the witness `m` attains `Ln` first
    pub witnesses: Vec<(u64, u64)>,
}

pub fn gphi_subset_check(digits: &[u32], phi: &PhiSpec, horizon: u64) -> Result<GphiReport> {
    if horizon == 0 || digits.len() < horizon as usize {
        return Err(Error::Precondition(format!(
            "need a prefix of {horizon} digits, got {}",
            digits.len()
        )));
    }
    if !phi.tends_to_infinity() {
        return Err(Error::Precondition("φ must tend to infinity".into()));
    }
    if let Some(n) = phi.first_decrease(horizon) {
        return Err(Error::Precondition(format!(
            "φ is not non-decreasing: φ({}) < φ({n})",
            n + 1
        )));
    }
    let mut witnesses = Vec::new();
    let mut holds = true;
    let (mut max, mut argmax) = (0u32, 0u64);
    for (i, &d) in digits[..horizon as usize].iter().enumerate() {
        let n = i as u64 + 1;
        if d > max {
            max = d;
            argmax = n;
        }
        if max >= phi.threshold(n) {
            holds &= digits[argmax as usize - 1] >= phi.threshold(argmax);
            witnesses.push((n, argmax));
        }
    }
    Ok(GphiReport {
        holds,
        horizon,
        witnesses,
    })
}

/// Exact probability of one event `dn >= t`.
pub fn hit_probability(threshold: u32) -> f64 {
    hit_probability_for_threshold(threshold)
}
