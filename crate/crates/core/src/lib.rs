//! Power-2-decaying Gauss-like expansions.
//!
//! Every `x` in `(0, 1]` has a unique expansion
//! `x = Σ 2^-(d1 + ... + di)` with digits `di >= 1`, generated by the map
//! `T x = 2^d x - 1` on `(2^-d, 2^-d+1]`. This crate provides exact digit
//! extraction and cylinders, Monte Carlo statistics of the digits under
//! Lebesgue measure, the dimension equations of the associated exceptional
//! sets and the Cantor-type constructions that realise their lower bounds.

pub mod dimension;
pub mod dyadic;
pub mod error;
pub mod expansion;
pub mod fractal;
pub mod phi;
pub mod rational;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use dimension::{
    box_dimension_from_counts, composition_count, s_alpha_curve, solve_mbonacci, solve_s_alpha, solve_s_m_alpha,
    DimensionCurve, SolverResult,
};
pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use expansion::{
    apply_t, cylinder, digit_of, expand, expand_periodic, reconstruct, Cylinder, Digit, DigitWord, ExpansionDigits,
    PeriodicExpansion,
};
pub use fractal::{
    construct_e_point, count_cylinders_by_length, enumerate_words, fundamental_interval, gaps_at_rank, generate_nk,
    holder_check, limsup_point_check, mu_measure, ConstructionSpec, Flavor, FundamentalInterval, MuMeasureValue,
    SparseIndexSequence,
};
pub use phi::PhiSpec;
pub use rational::RationalPoint;
pub use report::{Bound, ExperimentReport, Table};
pub use rng::{sample_stream, DigitStream, DEFAULT_SEED, SEED_ENV};
pub use sampler::{
    bb_event_indices, bb_experiment, digit_law_test, gphi_subset_check, ln_cdf_exact, ln_trajectory,
    max_digit_experiment, pushforward_uniformity_test, MaxDigitTrajectory,
};
