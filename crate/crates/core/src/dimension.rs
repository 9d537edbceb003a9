//! Dimension numbers: `s(α)`, `s_M(α)`, the M-bonacci constants and the
//! `α ↦ s(α)` curve, plus exact composition counts for box counting.
//!
//! Every root is found by bisection down to a bracket of width `1e-6`
//! followed by safeguarded Newton steps on a strictly monotone function.

use std::f64::consts::LN_2;
use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::log2_biguint;
use crate::error::{Error, Result};
use crate::stats::least_squares;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub root: f64,
    /// defining function evaluated at `root`
    pub residual: f64,
    pub iterations: u32,
    pub bracket: (f64, f64),
}

const BISECT_WIDTH: f64 = 1e-6;
const MAX_NEWTON: u32 = 100;

/// Root of `f` in `[lo, hi]`, given `f(lo) < 0 < f(hi)` or the reverse.
fn solve_bracketed(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> SolverResult {
    let lo_negative = f(lo) < 0.0;
    let mut iterations = 0;
    // moves the bracket end that has the same sign as f(x)
    let narrow = |x: f64, fx: f64, lo: &mut f64, hi: &mut f64| {
        if (fx < 0.0) == lo_negative {
            *lo = x;
        } else {
            *hi = x;
        }
    };
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        iterations += 1;
        if fm == 0.0 {
            return SolverResult {
                root: mid,
                residual: 0.0,
                iterations,
                bracket: (lo, hi),
            };
        }
        narrow(mid, fm, &mut lo, &mut hi);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let fx = f(x);
        iterations += 1;
        if fx == 0.0 {
            break;
        }
        narrow(x, fx, &mut lo, &mut hi);
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        x = next;
        if done || hi - lo <= 2.0 * f64::EPSILON * x.abs() {
            break;
        }
    }
    // the last Newton iterate and the bracket ends are all candidates
    let mut best = x;
    for cand in [lo, hi] {
        if f(cand).abs() < f(best).abs() {
            best = cand;
        }
    }
    SolverResult {
        root: best,
        residual: f(best),
        iterations,
        bracket: (lo.min(best), hi.max(best)),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Precondition(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    Ok(())
}

/// `2^(sα) (2^s - 1) - 1`.
pub fn s_alpha_defining(alpha: f64, s: f64) -> f64 {
    (s * alpha).exp2() * (s * LN_2).exp_m1() - 1.0
}

/// The unique `s` in `(0, 1]` with `2^(sα) (2^s - 1) = 1`.
pub fn solve_s_alpha(alpha: f64) -> Result<SolverResult> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(SolverResult {
            root: 1.0,
            residual: 0.0,
            iterations: 0,
            bracket: (0.0, 1.0),
        });
    }
    let f = |s: f64| s_alpha_defining(alpha, s);
    let df = |s: f64| {
        let a = (s * alpha).exp2();
        LN_2 * a * (alpha * (s * LN_2).exp_m1() + s.exp2())
    };
    Ok(solve_bracketed(f, df, 0.0, 1.0))
}

/// `Σ_{k=1}^{M} 2^(-(α+k)s) - 1`.
pub fn s_m_alpha_defining(m: u32, alpha: f64, s: f64) -> f64 {
    (1..=m).map(|k| (-(alpha + f64::from(k)) * s).exp2()).sum::<f64>() - 1.0
}

/// The root `s_M(α)` of `Σ_{k=1}^{M} 2^(-(α+k)s) = 1`.
///
/// For `M = 1` the sum stays below its supremum 1 for every `s > 0`, which is
/// reported as [`Error::NoRootInRange`].
pub fn solve_s_m_alpha(m: u32, alpha: f64) -> Result<SolverResult> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::Precondition("M must be >= 1".into()));
    }
    if m == 1 {
        return Err(Error::NoRootInRange { supremum: 1.0 });
    }
    let f = |s: f64| s_m_alpha_defining(m, alpha, s);
    let df = |s: f64| {
        -(1..=m)
            .map(|k| {
                let c = alpha + f64::from(k);
                c * LN_2 * (-c * s).exp2()
            })
            .sum::<f64>()
    };
    Ok(solve_bracketed(f, df, 0.0, 1.0))
}

/// The M-bonacci constant `s_M` and `dim = log2 s_M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MBonacci {
    pub m: u32,
    pub result: SolverResult,
    /// `2 - s_M`, accurate even where `s_M` rounds to 2
    pub gap_to_two: f64,
    pub dimension: f64,
    /// `1 - dimension`, accurate where `dimension` rounds to 1
    pub codimension: f64,
}

/// Largest root of `x^M - x^(M-1) - ... - x - 1`.
///
/// With `δ = 2 - x` the root satisfies `δ (2 - δ)^M = 1`. Writing
/// `δ = 2^-M e^w`, the solver works on `w` with defining function
/// `w + M ln(1 - 2^-(M+1) e^w)`, which is increasing on the bracket and keeps
/// full relative precision in `δ` even where `x` rounds to 2. The reported
/// residual is that function at the root.
pub fn solve_mbonacci(m: u32) -> Result<MBonacci> {
    if m < 2 {
        return Err(Error::Precondition(format!("M must be >= 2, got {m}")));
    }
    let mf = f64::from(m);
    let scale = (-mf - 1.0).exp2();
    let p = |w: f64| w + mf * (-scale * w.exp()).ln_1p();
    let dp = |w: f64| {
        let e = scale * w.exp();
        1.0 - mf * e / (1.0 - e)
    };
    let hi = (2.0 / (mf + 1.0)).ln() + mf * LN_2;
    let r = solve_bracketed(p, dp, 0.0, hi);
    let delta_of = |w: f64| (-mf).exp2() * w.exp();
    let delta = delta_of(r.root);
    Ok(MBonacci {
        m,
        result: SolverResult {
            root: 2.0 - delta,
            residual: r.residual,
            iterations: r.iterations,
            bracket: (2.0 - delta_of(r.bracket.1), 2.0 - delta_of(r.bracket.0)),
        },
        gap_to_two: delta,
        dimension: 1.0 + (-delta / 2.0).ln_1p() / LN_2,
        codimension: -(-delta / 2.0).ln_1p() / LN_2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub s_alpha: f64,
}

/// Samples of `α ↦ s(α)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionCurve {
    pub points: Vec<CurvePoint>,
}

impl DimensionCurve {
    pub fn is_strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].s_alpha < w[0].s_alpha)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "s_alpha"])?;
        for p in &self.points {
            w.write_record([p.alpha.to_string(), format!("{:.15}", p.s_alpha)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `α = 0, step, 2·step, ..., ≤ max`.
pub fn uniform_grid(max: f64, step: f64) -> Vec<f64> {
    let n = (max / step).floor() as usize;
    (0..=n).map(|i| i as f64 * step).collect()
}

/// `s(α)` on a strictly increasing, non-negative grid.
pub fn s_alpha_curve(grid: &[f64]) -> Result<DimensionCurve> {
    if grid
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::Precondition("grid must be strictly increasing".into()));
    }
    for &a in grid {
        check_alpha(a)?;
    }
    let points = grid
        .par_iter()
        .map(|&alpha| solve_s_alpha(alpha).map(|r| CurvePoint { alpha, s_alpha: r.root }))
        .collect::<Result<Vec<_>>>()?;
    Ok(DimensionCurve { points })
}

/// `N(0..=j_max)`: compositions of `j` into parts in `1..=M`.
pub fn composition_counts(j_max: usize, m: u32) -> Result<Vec<BigUint>> {
    if m == 0 {
        return Err(Error::Precondition("M must be >= 1".into()));
    }
    let m = m as usize;
    let mut n: Vec<BigUint> = Vec::with_capacity(j_max + 1);
    n.push(BigUint::one());
    // running sum of the last M values
    let mut window = BigUint::one();
    for j in 1..=j_max {
        let next = window.clone();
        window += &next;
        if j >= m {
            window -= &n[j - m];
        }
        n.push(next);
    }
    Ok(n)
}

pub fn composition_count(j: usize, m: u32) -> Result<BigUint> {
    Ok(composition_counts(j, m)?.pop().unwrap_or_else(BigUint::zero))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimensionEstimate {
    pub slope: f64,
    pub intercept: f64,
    /// `(j_lo, j_hi)` of the fitted upper half
    pub fit_range: (u64, u64),
    pub points_used: usize,
    pub rms_residual: f64,
    pub max_residual: f64,
    /// false when some count is smaller than its predecessor
    pub monotone: bool,
    pub zero_counts_skipped: usize,
}

/// Least-squares slope of `log2 N(j)` against `j` over the upper half of the
/// points. Zero counts are skipped; decreasing counts are flagged.
pub fn box_dimension_from_counts(counts: &[(u64, BigUint)]) -> Result<BoxDimensionEstimate> {
    if counts.len() < 10 {
        return Err(Error::Precondition(format!("need >= 10 points, got {}", counts.len())));
    }
    if counts.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Precondition("j must be strictly increasing".into()));
    }
    let monotone = counts.windows(2).all(|w| w[1].1 >= w[0].1);
    let upper = &counts[counts.len() / 2..];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut skipped = 0;
    for (j, n) in upper {
        if n.is_zero() {
            skipped += 1;
        } else {
            xs.push(*j as f64);
            ys.push(log2_biguint(n));
        }
    }
    if xs.len() < 2 {
        return Err(Error::Precondition(
            "fewer than two nonzero counts in the fitted range".into(),
        ));
    }
    let (slope, intercept) = least_squares(&xs, &ys);
    let residuals: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let max = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    Ok(BoxDimensionEstimate {
        slope,
        intercept,
        fit_range: (upper[0].0, upper[upper.len() - 1].0),
        points_used: xs.len(),
        rms_residual: rms,
        max_residual: max,
        monotone,
        zero_counts_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn s_alpha_reference_values() {
        assert_eq!(solve_s_alpha(0.0).unwrap().root, 1.0);
        let s1 = solve_s_alpha(1.0).unwrap();
        assert!((s1.root - GOLDEN.log2()).abs() < 1e-12);
        assert!(s1.residual.abs() <= 1e-12);
        let s2 = solve_s_alpha(2.0).unwrap().root;
        assert!((s2 - 0.551_463_089_7).abs() < 1e-9);
        assert!(solve_s_alpha(-1.0).is_err());
        assert!(solve_s_alpha(f64::NAN).is_err());
    }

    #[test]
    fn s_m_alpha_edges() {
        assert!(matches!(solve_s_m_alpha(1, 1.0), Err(Error::NoRootInRange { .. })));
        assert!(solve_s_m_alpha(0, 1.0).is_err());
        let r = solve_s_m_alpha(2, 0.0).unwrap().root;
        assert!((r - GOLDEN.log2()).abs() < 1e-12);
        let big = solve_s_m_alpha(64, 1.0).unwrap().root;
        assert!((big - solve_s_alpha(1.0).unwrap().root).abs() < 1e-9);
    }

    #[test]
    fn mbonacci_values() {
        let r = solve_mbonacci(2).unwrap();
        assert!((r.result.root - GOLDEN).abs() < 1e-12);
        assert!((r.dimension - GOLDEN.log2()).abs() < 1e-12);
        let r = solve_mbonacci(3).unwrap();
        assert!((r.result.root - 1.839_286_755_214_161).abs() < 1e-12);
        assert!(solve_mbonacci(1).is_err());
        let r = solve_mbonacci(64).unwrap();
        assert!(r.gap_to_two > 0.0 && r.gap_to_two < 1e-19);
        assert!(r.codimension > 0.0 && r.dimension <= 1.0);
    }

    #[test]
    fn composition_examples() {
        let fib = composition_counts(4, 2).unwrap();
        let fib: Vec<u32> = fib.iter().map(|b| b.try_into().unwrap()).collect();
        assert_eq!(fib, [1, 1, 2, 3, 5]);
        assert!(composition_counts(10, 1).unwrap().iter().all(|n| n.is_one()));
        assert_eq!(composition_count(4, 3).unwrap(), BigUint::from(7u32));
    }

    #[test]
    fn box_dimension_edges() {
        let flat: Vec<(u64, BigUint)> = (0..20).map(|j| (j, BigUint::from(5u32))).collect();
        let e = box_dimension_from_counts(&flat).unwrap();
        assert!(e.slope.abs() < 1e-12 && e.monotone);
        assert!(box_dimension_from_counts(&flat[..5]).is_err());
        let mut bumpy = flat.clone();
        bumpy[3].1 = BigUint::from(1u32);
        assert!(!box_dimension_from_counts(&bumpy).unwrap().monotone);
        let mut unordered = flat;
        unordered.swap(0, 1);
        assert!(box_dimension_from_counts(&unordered).is_err());
    }

    #[test]
    fn curve_validation() {
        let c = s_alpha_curve(&[0.0]).unwrap();
        assert_eq!(
            c.points,
            vec![CurvePoint {
                alpha: 0.0,
                s_alpha: 1.0
            }]
        );
        assert!(s_alpha_curve(&[1.0, 0.5]).is_err());
        assert!(s_alpha_curve(&[-1.0, 0.5]).is_err());
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("alpha,s_alpha\n0,1.0"));
    }
}
