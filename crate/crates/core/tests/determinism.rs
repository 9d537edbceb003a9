use p2dgl_core::sampler::{bb_experiment, max_digit_experiment};
use p2dgl_core::{s_alpha_curve, PhiSpec};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn reports_do_not_depend_on_pool_size() {
    let phi: PhiSpec = "log2n + log2log n".parse().unwrap();
    let run = || bb_experiment(&phi, 120, 20_000, 99, 0.05).unwrap().to_json();
    assert_eq!(in_pool(1, run), in_pool(4, run));
    let run = || max_digit_experiment(5, 150, 10_000).unwrap().to_json();
    assert_eq!(in_pool(1, run), in_pool(3, run));
    let grid: Vec<f64> = (0..200).map(|i| f64::from(i) * 0.05).collect();
    let run = || s_alpha_curve(&grid).unwrap();
    assert_eq!(in_pool(1, run), in_pool(4, run));
}

#[test]
fn seeds_change_the_sample() {
    let a = max_digit_experiment(1, 150, 10_000).unwrap();
    let b = max_digit_experiment(2, 150, 10_000).unwrap();
    assert_ne!(a.empirical, b.empirical);
}
