//! Small statistical helpers shared by the experiments.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper tail `P(X >= stat)` of a chi-square law with `df` degrees of freedom.
/// Returns 1 when `df == 0`.
pub fn chi_square_p_value(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    match ChiSquared::new(df as f64) {
        Ok(law) => law.sf(stat.max(0.0)),
        Err(_) => f64::NAN,
    }
}

/// Pearson statistic `Σ (obs - exp)^2 / exp` over cells with positive expectation.
pub fn pearson(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum()
}

/// Result of a contingency-table independence test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Chi-square test of independence with empirical marginals. Empty rows and
/// columns are dropped before counting degrees of freedom.
pub fn independence_test(table: &[Vec<u64>]) -> ChiSquareResult {
    let rows: Vec<&Vec<u64>> = table.iter().filter(|r| r.iter().any(|&c| c > 0)).collect();
    let width = table.first().map_or(0, Vec::len);
    let cols: Vec<usize> = (0..width).filter(|&j| rows.iter().any(|r| r[j] > 0)).collect();
    let total: u64 = rows.iter().flat_map(|r| r.iter()).sum();
    let df = rows.len().saturating_sub(1) * cols.len().saturating_sub(1);
    if df == 0 || total == 0 {
        return ChiSquareResult {
            statistic: 0.0,
            df: 0,
            p_value: 1.0,
        };
    }
    let n = total as f64;
    let row_sums: Vec<f64> = rows.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = cols
        .iter()
        .map(|&j| rows.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let mut statistic = 0.0;
    for (r, rs) in rows.iter().zip(&row_sums) {
        for (&j, cs) in cols.iter().zip(&col_sums) {
            let e = rs * cs / n;
            let o = r[j] as f64;
            statistic += (o - e) * (o - e) / e;
        }
    }
    ChiSquareResult {
        statistic,
        df,
        p_value: chi_square_p_value(statistic, df),
    }
}

/// Kolmogorov–Smirnov distance between the sample and Uniform(0, 1).
/// Sorts `samples` in place.
pub fn ks_uniform(samples: &mut [f64]) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let x = x.clamp(0.0, 1.0);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(hi - x).max(x - lo);
    }
    d
}

/// Asymptotic one-sample KS critical coefficient `c(a) = sqrt(-ln(a/2) / 2)`;
/// reject when `D > c(a) / sqrt(n)`.
pub fn ks_critical_coefficient(level: f64) -> f64 {
    (-(level / 2.0).ln() / 2.0).sqrt()
}

/// Standard deviation of a Bernoulli(p) frequency over `n` trials.
pub fn binomial_sigma(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Sample quantile of sorted data (lower order statistic, type 1).
pub fn quantile_sorted<T: Copy>(sorted: &[T], q: f64) -> T {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_tail() {
        assert!((chi_square_p_value(3.841458820694124, 1) - 0.05).abs() < 1e-9);
        assert_eq!(chi_square_p_value(5.0, 0), 1.0);
    }

    #[test]
    fn independence_of_product_table() {
        let t = vec![vec![40, 20], vec![20, 10]];
        let r = independence_test(&t);
        assert_eq!(r.df, 1);
        assert!(r.statistic.abs() < 1e-12);
        let degenerate = vec![vec![100, 0], vec![0, 0]];
        assert_eq!(independence_test(&degenerate).p_value, 1.0);
    }

    #[test]
    fn ks_of_grid_is_small() {
        let mut v: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!((ks_uniform(&mut v) - 0.0005).abs() < 1e-12);
        assert!((ks_critical_coefficient(0.001) - 1.9495).abs() < 1e-3);
    }

    #[test]
    fn quantiles_and_fit() {
        let v = [1, 2, 3, 4, 5];
        assert_eq!(quantile_sorted(&v, 0.5), 3);
        assert_eq!(quantile_sorted(&v, 0.0), 1);
        assert_eq!(quantile_sorted(&v, 1.0), 5);
        let (s, c) = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((s - 2.0).abs() < 1e-12 && (c - 1.0).abs() < 1e-12);
    }
}
