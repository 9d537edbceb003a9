use num_bigint::BigUint;
use p2dgl_core::dimension::{solve_s_alpha, solve_s_m_alpha};
use p2dgl_core::fractal::{
    child_cylinder_mass, count_cylinders_brute_force, count_cylinders_by_length, enumerate_words, MuMeasure,
};
use p2dgl_core::sampler::ln_cdf_exact;
use p2dgl_core::{
    apply_t, cylinder, expand, expand_periodic, fundamental_interval, reconstruct, ConstructionSpec, DigitStream,
    DigitWord, Dyadic, RationalPoint,
};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = RationalPoint> {
    (1u64..=1_000_000).prop_flat_map(|q| (1..=q).prop_map(move |p| RationalPoint::new(p, q).unwrap()))
}

fn word(max_len: usize, max_digit: u32) -> impl Strategy<Value = DigitWord> {
    prop::collection::vec(1..=max_digit, 1..=max_len).prop_map(|d| DigitWord::new(d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cylinder_contains_its_point(x in rational(), n in 1usize..80) {
        let w = expand(&x, n);
        let c = cylinder(&w).unwrap();
        prop_assert!(c.contains(&x));
        prop_assert_eq!(c.length, Dyadic::pow2_neg(w.digit_sum()));
    }

    #[test]
    fn shift_drops_the_first_digit(x in rational(), n in 1usize..40) {
        let w = expand(&x, n + 1);
        let tw = expand(&apply_t(&x), n);
        prop_assert_eq!(&w.digits()[1..], tw.digits());
    }

    #[test]
    fn cylinder_points_expand_back(w in word(30, 12)) {
        // right endpoint lies inside the half-open cylinder
        let c = cylinder(&w).unwrap();
        let right = RationalPoint::try_from(&c.right).unwrap();
        prop_assert_eq!(expand(&right, w.len()), w.clone());
        // the left endpoint belongs to the neighbouring cylinder
        let left = reconstruct(&w).unwrap();
        let e = expand(&left, w.len());
        let n = w.len();
        prop_assert_eq!(&e.digits()[..n - 1], &w.digits()[..n - 1]);
        prop_assert_eq!(e.digits()[n - 1], w.digits()[n - 1] + 1);
    }

    #[test]
    fn periodic_form_agrees_with_direct_expansion(x in rational()) {
        let p = expand_periodic(&x);
        prop_assert_eq!(p.prefix(50), expand(&x, 50));
    }

    #[test]
    fn dyadic_to_f64_is_exact_for_short_numerators(num in 1u64..(1 << 53), e in 0u64..900) {
        let d = Dyadic::new(BigUint::from(num), e);
        prop_assert_eq!(d.to_f64(), num as f64 * 2f64.powi(-(e as i32)));
    }

    #[test]
    fn streams_replay(seed in any::<u64>(), stream in 0u64..1000) {
        let a = DigitStream::new(seed, stream).take_vec(200);
        let b = DigitStream::new(seed, stream).take_vec(200);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn s_alpha_decreases(a in 0.0f64..50.0, step in 0.01f64..5.0) {
        let lo = solve_s_alpha(a).unwrap().root;
        let hi = solve_s_alpha(a + step).unwrap().root;
        prop_assert!(hi < lo);
    }

    #[test]
    fn s_m_alpha_increases_in_m(a in 0.0f64..10.0, m in 2u32..40) {
        let s = solve_s_m_alpha(m, a).unwrap().root;
        let t = solve_s_m_alpha(m + 1, a).unwrap().root;
        prop_assert!(t >= s);
        prop_assert!(t <= solve_s_alpha(a).unwrap().root + 1e-14);
    }

    #[test]
    fn ln_cdf_is_monotone(n in 1u64..200, m in 1u32..30) {
        let a = ln_cdf_exact(n, m).unwrap().to_f64();
        let b = ln_cdf_exact(n, m + 1).unwrap().to_f64();
        prop_assert!(a <= b);
        prop_assert!(b <= 1.0);
    }
}

fn spec_strategy() -> impl Strategy<Value = ConstructionSpec> {
    prop_oneof![
        (2u32..5).prop_map(|m| ConstructionSpec::bounded(m).unwrap()),
        (2u32..5, 0.3f64..3.0).prop_map(|(m, a)| ConstructionSpec::f_flavor_greedy(m, a, 3).unwrap()),
        (2u32..4, 2u32..5).prop_map(
            |(m, t)| ConstructionSpec::e_flavor(m, 0.5 - 1.0 / f64::from(2 * t), 1.0, t)
                .or_else(|_| ConstructionSpec::e_flavor(m, 0.3, 1.0, 3))
                .unwrap()
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dp_counts_match_brute_force(spec in spec_strategy()) {
        let dp: Vec<BigUint> = count_cylinders_by_length(&spec, 18).unwrap().into_iter().map(|(_, n)| n).collect();
        prop_assert_eq!(dp, count_cylinders_brute_force(&spec, 18).unwrap());
    }

    #[test]
    fn fundamental_intervals_fill_their_children(spec in spec_strategy(), n in 0u64..8) {
        for w in enumerate_words(&spec, n, 64).unwrap() {
            let j = fundamental_interval(&spec, &w).unwrap();
            prop_assert_eq!(&j.length, &child_cylinder_mass(&spec, &w).unwrap());
            if !w.is_empty() {
                let c = cylinder(&w).unwrap();
                prop_assert!(c.left <= j.left && j.right <= c.right);
            }
        }
    }

    #[test]
    fn mu_is_additive(m in 2u32..5, alpha in 0.3f64..3.0, n in 0u64..10) {
        let spec = ConstructionSpec::f_flavor_greedy(m, alpha, 3).unwrap();
        let mu = MuMeasure::new(&spec).unwrap();
        let next = spec.digit_range(n + 1).unwrap();
        for w in enumerate_words(&spec, n, 16).unwrap() {
            let parent = mu.value(&w).unwrap().log2_value;
            let total: f64 = (next.lo..=next.hi)
                .map(|c| {
                    let mut d = w.digits().to_vec();
                    d.push(c);
                    (mu.value(&DigitWord::new(d).unwrap()).unwrap().log2_value - parent).exp2()
                })
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "sum {}", total);
        }
    }
}
