//! Gradient-variance statistics, exact epoch-map algebra and brute-force
//! permutation oracles.

mod enumerate;
mod epochmap;
mod fit;
mod prefix;
mod variance;

pub use enumerate::{all_permutations, for_each_permutation, MAX_EXHAUSTIVE};
pub use epochmap::{
    epoch_map_exact, order_sensitivity, permutation_variance, reversal_pair_sum, second_order_term,
    trajectory_radius, EpochMapReport, Sampling, MAX_DENSE_WORK, MAX_EXHAUSTIVE_EPOCHS,
};
pub use fit::{fit_loglog_slope, resolvable_points};
pub use prefix::{
    check_prefix_exhaustive, check_prefix_mc, population_variance, prefix_closed_form,
    prefix_moments_exhaustive, prefix_second_moment_exhaustive, prefix_second_moment_mc,
    PrefixMode, PrefixVarianceCheck,
};
pub use variance::{block_means, variance_decomposition, variance_decomposition_of, VarianceReport};
