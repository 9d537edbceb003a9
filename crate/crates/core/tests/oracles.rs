//! Hand-derived values and exact oracles for every module.

use num_bigint::BigUint;
use p2dgl_core::dimension::{
    box_dimension_from_counts, composition_count, composition_counts, solve_mbonacci, solve_s_alpha, solve_s_m_alpha,
};
use p2dgl_core::fractal::{count_words, enumerate_words, gaps_at_rank, holder_check, Flavor};
use p2dgl_core::sampler::{
    bb_event_indices, bb_oracle, digit_law_report, gphi_subset_check, ln_cdf_exact, ln_trajectory,
};
use p2dgl_core::{
    apply_t, count_cylinders_by_length, cylinder, digit_of, expand, expand_periodic, generate_nk, reconstruct,
    sample_stream, ConstructionSpec, DigitWord, Error, PhiSpec, RationalPoint,
};

fn rp(s: &str) -> RationalPoint {
    s.parse().unwrap()
}

fn word(d: &[u32]) -> DigitWord {
    DigitWord::new(d.to_vec()).unwrap()
}

#[test]
fn digits_and_shift() {
    assert_eq!(digit_of(&rp("1")).get(), 1);
    assert_eq!(digit_of(&rp("1/2")).get(), 2);
    assert_eq!(digit_of(&rp("1/5")).get(), 3);
    assert_eq!(apply_t(&rp("1")), rp("1"));
    assert_eq!(apply_t(&rp("1/5")), rp("3/5"));
    assert_eq!(apply_t(&rp("5/8")), rp("1/4"));
    assert_eq!(expand(&rp("5/8"), 4), word(&[1, 3, 1, 1]));
    assert_eq!(expand(&rp("1/3"), 4), word(&[2, 2, 2, 2]));
    assert_eq!(expand(&rp("1"), 3), word(&[1, 1, 1]));
}

#[test]
fn periodic_tags() {
    let p = expand_periodic(&rp("1/5"));
    assert!(p.preperiod.is_empty());
    assert_eq!(p.period, word(&[3, 1]));
    let p = expand_periodic(&rp("1/3"));
    assert_eq!(p.period, word(&[2]));
    let p = expand_periodic(&rp("1/2"));
    assert_eq!((p.preperiod, p.period), (word(&[2]), word(&[1])));
}

#[test]
fn cylinder_endpoints() {
    let ends = |d: &[u32]| {
        let c = cylinder(&word(d)).unwrap();
        let q = |x: &p2dgl_core::Dyadic| RationalPoint::try_from(x).unwrap();
        (q(&c.left), q(&c.right), q(&c.length))
    };
    assert_eq!(ends(&[1, 2]), (rp("5/8"), rp("3/4"), rp("1/8")));
    assert_eq!(ends(&[1]), (rp("1/2"), rp("1"), rp("1/2")));
    assert_eq!(ends(&[2, 1, 1]), (rp("7/16"), rp("1/2"), rp("1/16")));
    let c = cylinder(&word(&[2, 1, 1])).unwrap();
    assert!(c.contains(&rp("1/2")));
    assert_eq!(reconstruct(&word(&[2, 2, 2])).unwrap(), rp("21/64"));
    assert_eq!(reconstruct(&word(&[1, 3])).unwrap(), rp("9/16"));
    assert_eq!(reconstruct(&word(&[1; 10])).unwrap(), rp("1023/1024"));
    assert!(matches!(cylinder(&DigitWord::empty()), Err(Error::EmptyWord)));
}

#[test]
fn event_index_extremes() {
    let digits = sample_stream(3).take_vec(1000);
    let all = bb_event_indices(digits.iter().copied(), &PhiSpec::constant(1.0), 1000).unwrap();
    assert_eq!(all, (1..=1000).collect::<Vec<_>>());
    let none = bb_event_indices(digits.iter().copied(), &PhiSpec::constant(1e9), 1000).unwrap();
    assert!(none.is_empty());
}

#[test]
fn log2n_event_count_within_five_sigma() {
    let phi: PhiSpec = "log2n".parse().unwrap();
    let n = 100_000;
    let oracle = bb_oracle(&phi, n);
    let hits = bb_event_indices(sample_stream(11).take(n as usize), &phi, n).unwrap();
    let dev = (hits.len() as f64 - oracle.expected_events).abs();
    assert!(
        dev <= 5.0 * oracle.expected_events.sqrt(),
        "{} vs {}",
        hits.len(),
        oracle.expected_events
    );
}

#[test]
fn two_log2n_expected_events_is_the_exact_sum() {
    let phi: PhiSpec = "2log2n".parse().unwrap();
    let oracle = bb_oracle(&phi, 10_000);
    let exact: f64 = (1..=10_000u64).map(|n| phi.hit_probability(n)).sum();
    assert!((oracle.expected_events - exact).abs() < 1e-12);
    // thresholds round up, so the sum sits below the continuous 2/n^2 total
    assert!(oracle.expected_events < std::f64::consts::PI.powi(2) / 3.0 + 1.0);
}

#[test]
fn degenerate_stream_fails_marginal_law() {
    let ones = vec![1u32; 20_000];
    let report = digit_law_report(&ones, 12, 0).unwrap();
    assert!(!report.passed());
    let marginal = report.find_bound("marginal_p").unwrap();
    assert!(marginal.value < 1e-6);
    let small = report.diagnostics.get("small_sample").and_then(|v| v.as_bool());
    assert_eq!(small, Some(true));
}

#[test]
fn running_maximum_and_exact_cdf() {
    let t = ln_trajectory([1, 3, 1, 1], 4).unwrap();
    assert_eq!(t.values(), &[1, 3, 3, 3]);
    let fifth = expand_periodic(&rp("1/5"));
    let t = ln_trajectory(fifth.digits(), 20).unwrap();
    assert!(t.values().iter().all(|&l| l == 3));
    let p = ln_cdf_exact(3, 2).unwrap();
    assert_eq!(p.numerator * 64u32, BigUint::from(27u32) << p.denominator_log2);
    let p = ln_cdf_exact(1, 1).unwrap();
    assert_eq!(p.to_f64(), 0.5);
}

#[test]
fn gphi_witnesses_track_a_planted_digit() {
    let mut digits = vec![1u32; 40];
    digits[4] = 30;
    let phi: PhiSpec = "log2n".parse().unwrap();
    let r = gphi_subset_check(&digits, &phi, 40).unwrap();
    assert!(r.holds);
    assert!(r.witnesses.iter().filter(|(n, _)| *n >= 5).all(|&(_, m)| m == 5));
    assert!(gphi_subset_check(&digits, &PhiSpec::constant(3.0), 40).is_err());
}

#[test]
fn dimension_closed_forms() {
    assert!((solve_s_alpha(1.0).unwrap().root - 0.694_241_913_6).abs() < 1e-10);
    let s2 = solve_s_alpha(2.0).unwrap().root;
    let y = s2.exp2();
    assert!((y.powi(3) - y.powi(2) - 1.0).abs() < 1e-12);
    assert!((s2 - 0.5515).abs() < 1e-4);
    // 2^(10 s)(2^s - 1) = 1 at s ≈ 0.2440
    let s10 = solve_s_alpha(10.0).unwrap().root;
    assert!((s10 - 0.244_005_738).abs() < 1e-8, "{s10}");
    assert!((s10 * 10.0).exp2() * (s10.exp2() - 1.0) - 1.0 < 1e-12);
    let s160 = solve_s_alpha(160.0).unwrap().root;
    assert!(s160 > 0.033 && s160 < 0.034, "{s160}");
    assert!(solve_s_alpha(720.0).unwrap().root < 1e-2);
    assert!(solve_s_alpha(700.0).unwrap().root > 1e-2);
    let large = solve_s_m_alpha(64, 1.0).unwrap().root;
    assert!((large - solve_s_alpha(1.0).unwrap().root).abs() < 1e-9);
    assert!(solve_s_m_alpha(1, 1.0).is_err());
    // Σ_{σ=1,2} 2^-σs = 1 is the golden-ratio equation again
    assert!((solve_s_m_alpha(2, 0.0).unwrap().root - solve_s_alpha(1.0).unwrap().root).abs() < 1e-12);
}

#[test]
fn mbonacci_constants() {
    let m2 = solve_mbonacci(2).unwrap();
    assert!((m2.result.root - 1.618_033_988_7).abs() < 1e-10);
    let m3 = solve_mbonacci(3).unwrap();
    assert!((m3.result.root - 1.839_286_755_2).abs() < 1e-10);
    assert!((m3.dimension - 0.8792).abs() < 1e-4);
    let m20 = solve_mbonacci(20).unwrap();
    assert!(m20.gap_to_two > 0.0 && m20.gap_to_two < (-18f64).exp2());
    let mut prev = 1.0;
    for m in 2..=40 {
        let r = solve_mbonacci(m).unwrap().result.root;
        assert!(r >= prev && r < 2.0);
        prev = r;
    }
}

#[test]
fn mbonacci_m20_sign_check_is_exact() {
    // p(x) = x^20 - x^19 - ... - 1 changes sign on (2 - 2^-18, 2); evaluate at dyadic x exactly
    use num_bigint::BigInt;
    let sign_at = |num: BigInt, e: u32| {
        // x = num / 2^e, scale by 2^(20 e)
        let mut total = num.pow(20);
        for i in 0..20u32 {
            total -= num.pow(i) * (BigInt::from(1) << (e * (20 - i)));
        }
        total.sign()
    };
    let two = BigInt::from(2) << 18u32;
    let lo = &two - 1;
    assert_eq!(sign_at(lo, 18), num_bigint::Sign::Minus);
    assert_eq!(sign_at(two, 18), num_bigint::Sign::Plus);
}

#[test]
fn composition_counting() {
    assert_eq!(composition_count(4, 3).unwrap(), BigUint::from(7u32));
    let fib = composition_counts(30, 2).unwrap();
    assert_eq!(fib[10], BigUint::from(89u32));
    let spec = ConstructionSpec::bounded(2).unwrap();
    let dp = count_cylinders_by_length(&spec, 30).unwrap();
    assert!(dp.iter().zip(&fib).all(|((_, a), b)| a == b));
    let flat: Vec<(u64, BigUint)> = (0..20).map(|j| (j, BigUint::from(5u32))).collect();
    assert!(box_dimension_from_counts(&flat).unwrap().slope.abs() < 1e-12);
}

#[test]
fn counting_series_terms_stay_bounded_at_the_root() {
    // N(j) s_M^-j tends to a constant, so partial sums grow linearly rather than geometrically
    let counts = composition_counts(1000, 3).unwrap();
    let s3 = solve_mbonacci(3).unwrap().result.root;
    let log_term = |j: usize, x: f64| p2dgl_core::fractal::count_to_f64(&counts[j]).ln() - j as f64 * x.ln();
    let at_root = (log_term(1000, s3) - log_term(500, s3)).exp();
    assert!((at_root - 1.0).abs() < 1e-6, "{at_root}");
    let below = (log_term(1000, s3 - 1e-3) - log_term(500, s3 - 1e-3)).exp();
    assert!(below > 1.3, "{below}");
}

#[test]
fn greedy_sequence_inequalities() {
    let seq = generate_nk(1.0, 3).unwrap();
    let mut sum = 0;
    for (i, &n) in seq.positions().iter().enumerate() {
        let k = i as u64 + 1;
        assert!(((k + 1) * n) / k - n > 1);
        assert!(k * sum < n);
        sum += n;
    }
}

#[test]
fn word_counts_by_flavor() {
    let f = ConstructionSpec::f_flavor_greedy(2, 1.0, 3).unwrap();
    assert_eq!(f.flavor(), Flavor::F);
    let n1 = f.nk().unwrap().get(1).unwrap();
    assert_eq!(count_words(&f, n1 - 1).unwrap(), BigUint::from(1u32 << (n1 - 1)));
    let width = ((2 * n1) - n1) as u32;
    assert_eq!(count_words(&f, n1).unwrap(), BigUint::from((1u32 << (n1 - 1)) * width));
    let e = ConstructionSpec::e_flavor(2, 0.5, 1.0, 4).unwrap();
    // n_2 = 16 is forced
    assert_eq!(count_words(&e, 16).unwrap(), count_words(&e, 15).unwrap());
    let j = count_cylinders_by_length(&f, 10).unwrap();
    assert_eq!(j[0].1, BigUint::from(1u32));
    // position 2 takes digit 3 or 4, so sum 3 is unreachable
    let n: Vec<u32> = j[..6].iter().map(|(_, c)| u32::try_from(c).unwrap()).collect();
    assert_eq!(n, [1, 1, 1, 0, 1, 3]);
}

#[test]
fn gap_bounds_below_and_at_the_first_special_position() {
    let spec = ConstructionSpec::f_flavor_greedy(2, 1.0, 4).unwrap();
    let n1 = spec.nk().unwrap().get(1).unwrap();
    for n in 0..n1 {
        let g = gaps_at_rank(&spec, n, 1 << 20).unwrap();
        assert!(g.all_bounds_hold);
    }
    // n + 1 = n_2 exercises the forced-range bound across cousins, not only siblings
    let n2 = spec.nk().unwrap().get(2).unwrap();
    let g = gaps_at_rank(&spec, n2 - 1, 1 << 20).unwrap();
    assert!(g.all_bounds_hold && g.neighbour_pairs + 1 == g.intervals);
    assert_eq!(
        g.intervals as usize,
        enumerate_words(&spec, n2 - 1, 1 << 20).unwrap().count()
    );
}

#[test]
fn holder_examples() {
    let spec = ConstructionSpec::f_flavor_greedy(2, 1.0, 3).unwrap();
    let n1 = spec.nk().unwrap().get(1).unwrap();
    let r = holder_check(&spec, n1 + 2, 0.1, 1 << 20).unwrap();
    assert!(r.pass && !r.expected_failure_mode);
    assert!(holder_check(&spec, 4, 0.0, 1 << 20).unwrap().expected_failure_mode);
    // rank 1: J(d) is the single child cylinder set at position 2
    let one = holder_check(&spec, 1, 0.5, 16).unwrap();
    let mu = p2dgl_core::mu_measure(&spec, &word(&[1])).unwrap();
    let j = p2dgl_core::fundamental_interval(&spec, &word(&[1])).unwrap();
    let expect = mu.log2_value - one.exponent * j.length.log2();
    assert!((one.ranks[0].log2_c_star - expect).abs() < 1e-12);
}
